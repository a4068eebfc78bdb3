//! The fabric execution controller: fetches one VLIW per cycle, dispatches
//! slot sub-instructions, applies the aux op, evaluates the flow condition
//! on the control signals latched at the end of the previous cycle, and
//! manages stalls and traps.

use serde::Serialize;
use thiserror::Error;

use crate::fabric::{Fabric, FabricConfig, SimFault};
use crate::isa::{
    decode_vliw, validate_program, AuxOpcode, DstKind, FlowOp, FlowOpcode, OperandKind,
    OperandSel, ProgramImage, Vliw, NUM_AGU_REGS, NUM_PARAM_SETS, NUM_SLOTS,
};

pub const COUNTER_MASK: u16 = 0x0fff;

/// One of the four controller parameter sets: a jump destination and a
/// 12-bit wrap-around counter.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ParamSet {
    pub destination: u16,
    pub counter: u16,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum TrapKind {
    InvalidJumpTarget,
    AcceleratorError { slot: usize, message: String },
    StallTimeout,
    User { value: u8 },
}

impl TrapKind {
    pub fn name(&self) -> &'static str {
        match self {
            TrapKind::InvalidJumpTarget => "INVALID_JUMP_TARGET",
            TrapKind::AcceleratorError { .. } => "ACCELERATOR_ERROR",
            TrapKind::StallTimeout => "STALL_TIMEOUT",
            TrapKind::User { .. } => "USER",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Trap {
    pub kind: TrapKind,
    pub cycle: u64,
    pub pc: u16,
}

#[derive(Debug, Clone)]
pub struct ControllerConfig {
    /// Consecutive stalled cycles of one VLIW before STALL_TIMEOUT.
    pub stall_threshold: u32,
    /// Hard safety bound on total cycles for `run`.
    pub max_cycles: u64,
    /// Raise ACCELERATOR_ERROR when a slot's error line latches.
    pub trap_on_nan: bool,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        ControllerConfig {
            stall_threshold: crate::fabric::DEFAULT_STALL_THRESHOLD,
            max_cycles: 100_000_000,
            trap_on_nan: true,
        }
    }
}

#[derive(Debug, Error)]
pub enum SetupError {
    #[error("program fails validation: {0}")]
    Invalid(String),
    #[error("slot {slot} binding mismatch: image wants {wanted}, fabric has {bound}")]
    BindingMismatch {
        slot: usize,
        wanted: &'static str,
        bound: &'static str,
    },
    #[error("image memory segment ({image} words) exceeds fabric memory ({fabric} words)")]
    MemoryTooSmall { image: usize, fabric: usize },
}

#[derive(Debug, Error)]
pub enum StepError {
    #[error("stepping a trapped machine")]
    Trapped,
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("cycle limit {0} exceeded")]
    CycleLimit(u64),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StepEvent {
    Retired { next_pc: u16 },
    Stalled,
    Trapped(Trap),
    Halted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowDecision {
    Fallthrough,
    Jump(u16),
    Trap(u8),
}

/// Evaluate a flow sub-instruction against the parameter sets and the five
/// latched 2-bit control signals. CNT variants compare the selected set's
/// counter with the operand, unsigned. ACC variants hold iff EVERY slot in
/// `acc_mask` satisfies the comparison against `operand mod 4`.
pub fn eval_flow(f: &FlowOp, sets: &[ParamSet; NUM_PARAM_SETS], signals: [u8; NUM_SLOTS]) -> FlowDecision {
    use FlowOpcode::*;
    let dest = sets[f.param_set as usize].destination;
    let cnt = sets[f.param_set as usize].counter;
    let cnt_hit = |ok: bool| if ok { FlowDecision::Jump(dest) } else { FlowDecision::Fallthrough };
    let acc_holds = |cmp: fn(u8, u8) -> bool| {
        let want = (f.operand % 4) as u8;
        (0..NUM_SLOTS).all(|s| f.acc_mask & (1 << s) == 0 || cmp(signals[s], want))
    };
    match f.opcode {
        NoJmp => FlowDecision::Fallthrough,
        AlwJmp => FlowDecision::Jump(dest),
        JmpIfCntEq => cnt_hit(cnt == f.operand),
        JmpIfCntNeq => cnt_hit(cnt != f.operand),
        JmpIfCntLt => cnt_hit(cnt < f.operand),
        JmpIfCntGt => cnt_hit(cnt > f.operand),
        JmpIfAccEq => cnt_hit(acc_holds(|s, w| s == w)),
        JmpIfAccNeq => cnt_hit(acc_holds(|s, w| s != w)),
        JmpIfAccLt => cnt_hit(acc_holds(|s, w| s < w)),
        JmpIfAccGt => cnt_hit(acc_holds(|s, w| s > w)),
        TrapAlw => FlowDecision::Trap(f.trap_value),
        TrapIfAccEq if acc_holds(|s, w| s == w) => FlowDecision::Trap(f.trap_value),
        TrapIfAccNeq if acc_holds(|s, w| s != w) => FlowDecision::Trap(f.trap_value),
        TrapIfAccLt if acc_holds(|s, w| s < w) => FlowDecision::Trap(f.trap_value),
        TrapIfAccGt if acc_holds(|s, w| s > w) => FlowDecision::Trap(f.trap_value),
        _ => FlowDecision::Fallthrough,
    }
}

/// Per-cycle trace record. The field set is contractual; exact string
/// contents are informational.
#[derive(Debug, Clone, Serialize)]
pub struct TraceRecord {
    pub cycle: u64,
    pub pc: u16,
    pub event: String,
    pub flow: String,
    pub counters: [u16; NUM_PARAM_SETS],
    pub stall_count: u32,
    pub slots: Vec<TraceSlot>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceSlot {
    pub op: u8,
    pub ctrl: u8,
}

impl TraceRecord {
    pub const CSV_HEADER: &'static str = "cycle,pc,event,flow,cnt0,cnt1,cnt2,cnt3,stall_count,\
        slot0_op,slot0_ctrl,slot1_op,slot1_ctrl,slot2_op,slot2_ctrl,slot3_op,slot3_ctrl,slot4_op,slot4_ctrl";

    pub fn to_csv_row(&self) -> String {
        let mut row = format!(
            "{},{},{},{},{},{},{},{},{}",
            self.cycle,
            self.pc,
            self.event,
            self.flow,
            self.counters[0],
            self.counters[1],
            self.counters[2],
            self.counters[3],
            self.stall_count
        );
        for s in &self.slots {
            row.push_str(&format!(",{},{}", s.op, s.ctrl));
        }
        row
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub trap: Option<Trap>,
    pub cycles: u64,
    pub retired: u64,
    pub stalled: u64,
}

pub struct Machine {
    pub fabric: Fabric,
    program: Vec<Vliw>,
    pub cfg: ControllerConfig,
    pub pc: u16,
    pub param_sets: [ParamSet; NUM_PARAM_SETS],
    pub agu: [u32; NUM_AGU_REGS],
    pub cycle: u64,
    pub stall_count: u32,
    pub retired: u64,
    pub stalled: u64,
    pub halted: bool,
    pub trap: Option<Trap>,
}

impl Machine {
    /// Build a machine over an existing fabric. The fabric's slot kinds
    /// must match the image bindings; image memory is loaded word-for-word
    /// starting at address 0.
    pub fn reset(p: &ProgramImage, cfg: ControllerConfig, mut fabric: Fabric) -> Result<Machine, SetupError> {
        let diags = validate_program(p);
        if !diags.is_empty() {
            return Err(SetupError::Invalid(
                diags.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "),
            ));
        }
        for (slot, &wanted) in p.slot_bindings.iter().enumerate() {
            let bound = fabric.slots[slot].kind;
            if bound != wanted {
                return Err(SetupError::BindingMismatch {
                    slot,
                    wanted: wanted.name(),
                    bound: bound.name(),
                });
            }
        }
        if p.memory.len() > fabric.memory.len() {
            return Err(SetupError::MemoryTooSmall {
                image: p.memory.len(),
                fabric: fabric.memory.len(),
            });
        }
        fabric.memory[..p.memory.len()].copy_from_slice(&p.memory);
        let program = p
            .words
            .iter()
            .map(|w| decode_vliw(w).expect("validated image decodes"))
            .collect();
        Ok(Machine {
            fabric,
            program,
            cfg,
            pc: p.entry_pc,
            param_sets: Default::default(),
            agu: Default::default(),
            cycle: 0,
            stall_count: 0,
            retired: 0,
            stalled: 0,
            halted: false,
            trap: None,
        })
    }

    /// Convenience constructor: instantiate a fabric matching the image's
    /// slot bindings from a fabric configuration.
    pub fn boot(p: &ProgramImage, cfg: ControllerConfig, fab_cfg: &FabricConfig) -> Result<Machine, SetupError> {
        Machine::reset(p, cfg, fab_cfg.build(p.slot_bindings))
    }

    pub fn vliw_count(&self) -> u32 {
        self.program.len() as u32
    }

    fn signals(&self) -> [u8; NUM_SLOTS] {
        let mut s = [0u8; NUM_SLOTS];
        for (i, slot) in self.fabric.slots.iter().enumerate() {
            s[i] = slot.ctrl;
        }
        s
    }

    fn raise(&mut self, kind: TrapKind) -> StepEvent {
        let t = Trap {
            kind,
            cycle: self.cycle,
            pc: self.pc,
        };
        self.trap = Some(t.clone());
        StepEvent::Trapped(t)
    }

    fn read_operand(&mut self, sel: OperandSel, imm: u8) -> Result<u32, SimFault> {
        match sel.kind {
            OperandKind::None => Ok(0),
            OperandKind::MemAgu => {
                let reg = sel.index as usize;
                let addr = self.agu[reg];
                let v = self.fabric.mem_read(addr)?;
                self.agu[reg] = self.agu[reg].wrapping_add(1);
                Ok(v)
            }
            OperandKind::SlotOut => Ok(self.fabric.slots[sel.index as usize].out),
            OperandKind::Imm => Ok(imm as u32),
        }
    }

    /// True if issuing this VLIW must be held: a participating slot is
    /// still busy, a source reads the output of a busy slot, a kernel is
    /// waiting on stream data, or an ACC-conditioned flow op selects a
    /// busy slot (its signal has not latched yet).
    fn vliw_stalls(&self, v: &Vliw) -> bool {
        for (i, si) in v.slots.iter().enumerate() {
            if !si.is_nop() && self.fabric.would_stall(i, si.op) {
                return true;
            }
            for src in [si.src_a, si.src_b] {
                if src.kind == OperandKind::SlotOut && self.fabric.slots[src.index as usize].is_busy() {
                    return true;
                }
            }
        }
        if v.flow.opcode.is_acc_conditioned() {
            for i in 0..NUM_SLOTS {
                if v.flow.acc_mask & (1 << i) != 0 && self.fabric.slots[i].is_busy() {
                    return true;
                }
            }
        }
        false
    }

    fn apply_aux(&mut self, v: &Vliw) {
        let aux = v.aux;
        let t = aux.target as usize;
        match aux.opcode {
            AuxOpcode::Nop => {}
            AuxOpcode::PsSetDest => self.param_sets[t].destination = aux.operand,
            AuxOpcode::PsCntSet => self.param_sets[t].counter = aux.operand & COUNTER_MASK,
            AuxOpcode::PsCntInc => {
                self.param_sets[t].counter = (self.param_sets[t].counter + 1) & COUNTER_MASK
            }
            AuxOpcode::PsCntReset => self.param_sets[t].counter = 0,
            AuxOpcode::AguSet => self.agu[t] = aux.operand as u32,
            AuxOpcode::AguAdd => self.agu[t] = self.agu[t].wrapping_add(aux.operand as u32),
        }
    }

    /// Advance the machine by one cycle.
    pub fn step(&mut self) -> Result<StepEvent, StepError> {
        if self.trap.is_some() {
            return Err(StepError::Trapped);
        }
        if self.halted {
            return Ok(StepEvent::Halted);
        }

        // highest-precedence trap: a latched error line
        if self.cfg.trap_on_nan {
            for (i, s) in self.fabric.slots.iter().enumerate() {
                if s.error {
                    return Ok(self.raise(TrapKind::AcceleratorError {
                        slot: i,
                        message: "error line asserted".to_string(),
                    }));
                }
            }
        }

        if self.pc as usize >= self.program.len() {
            self.halted = true;
            return Ok(StepEvent::Halted);
        }
        let v = self.program[self.pc as usize];

        if self.vliw_stalls(&v) {
            self.fabric.tick();
            self.stall_count += 1;
            self.cycle += 1;
            self.stalled += 1;
            if self.stall_count >= self.cfg.stall_threshold {
                return Ok(self.raise(TrapKind::StallTimeout));
            }
            return Ok(StepEvent::Stalled);
        }

        // issue slots in order; AGU post-increments and memory writes from
        // earlier slots are visible to later slots in the same VLIW
        for i in 0..NUM_SLOTS {
            let si = v.slots[i];
            if si.is_nop() {
                continue;
            }
            let issued = (|| {
                let a = self.read_operand(si.src_a, si.imm)?;
                let b = self.read_operand(si.src_b, si.imm)?;
                let exec = self.fabric.issue(i, si.op, a, b)?;
                if si.dst.kind == DstKind::MemAgu {
                    let reg = si.dst.index as usize;
                    let addr = self.agu[reg];
                    self.fabric.mem_write(addr, exec.out)?;
                    self.agu[reg] = self.agu[reg].wrapping_add(1);
                }
                Ok::<(), SimFault>(())
            })();
            if let Err(e) = issued {
                return Ok(self.raise(TrapKind::AcceleratorError {
                    slot: i,
                    message: e.to_string(),
                }));
            }
        }

        self.apply_aux(&v);

        // flow sees the signals latched at the end of the previous cycle
        let decision = eval_flow(&v.flow, &self.param_sets, self.signals());
        let next_pc = match decision {
            FlowDecision::Fallthrough => self.pc + 1,
            FlowDecision::Jump(dest) => {
                if dest as u32 >= self.vliw_count() {
                    self.cycle += 1;
                    return Ok(self.raise(TrapKind::InvalidJumpTarget));
                }
                dest
            }
            FlowDecision::Trap(value) => {
                self.cycle += 1;
                return Ok(self.raise(TrapKind::User { value }));
            }
        };

        self.fabric.tick();
        self.cycle += 1;
        self.stall_count = 0;
        self.retired += 1;
        self.pc = next_pc;
        if next_pc as u32 >= self.vliw_count() {
            self.halted = true;
        }
        Ok(StepEvent::Retired { next_pc })
    }

    fn trace_record(&self, pc: u16, v: Option<&Vliw>, event: &StepEvent) -> TraceRecord {
        let (event_s, flow_s) = match event {
            StepEvent::Retired { next_pc } => ("RETIRED".to_string(), format!("pc->{next_pc}")),
            StepEvent::Stalled => ("STALLED".to_string(), "-".to_string()),
            StepEvent::Trapped(t) => (format!("TRAPPED:{}", t.kind.name()), "-".to_string()),
            StepEvent::Halted => ("HALTED".to_string(), "-".to_string()),
        };
        let mut counters = [0u16; NUM_PARAM_SETS];
        for (i, p) in self.param_sets.iter().enumerate() {
            counters[i] = p.counter;
        }
        TraceRecord {
            cycle: self.cycle,
            pc,
            event: event_s,
            flow: flow_s,
            counters,
            stall_count: self.stall_count,
            slots: (0..NUM_SLOTS)
                .map(|i| TraceSlot {
                    op: v.map_or(0, |v| v.slots[i].op),
                    ctrl: self.fabric.slots[i].ctrl,
                })
                .collect(),
        }
    }

    /// Run to halt or trap. Exceeding `max_cycles` is a resource-limit
    /// error, not a trap.
    pub fn run(&mut self) -> Result<RunOutcome, RunError> {
        self.run_with_trace(|_| {})
    }

    /// Run to halt or trap, emitting one trace record per cycle.
    pub fn run_with_trace(&mut self, mut sink: impl FnMut(&TraceRecord)) -> Result<RunOutcome, RunError> {
        loop {
            if self.cycle >= self.cfg.max_cycles && !self.halted {
                return Err(RunError::CycleLimit(self.cfg.max_cycles));
            }
            let pc = self.pc;
            let v = self.program.get(pc as usize).copied();
            let event = self.step().expect("run does not step a trapped machine");
            match event {
                StepEvent::Halted => {
                    return Ok(RunOutcome {
                        trap: None,
                        cycles: self.cycle,
                        retired: self.retired,
                        stalled: self.stalled,
                    })
                }
                StepEvent::Trapped(ref t) => {
                    sink(&self.trace_record(pc, v.as_ref(), &event));
                    return Ok(RunOutcome {
                        trap: Some(t.clone()),
                        cycles: self.cycle,
                        retired: self.retired,
                        stalled: self.stalled,
                    });
                }
                _ => sink(&self.trace_record(pc, v.as_ref(), &event)),
            }
        }
    }
}
