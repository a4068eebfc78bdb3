//! The reconfigurable fabric: five kernel slots, shared word-addressed
//! memory, per-op latency modeling and host-fed stream FIFOs.

use std::collections::HashMap;

use serde::Deserialize;
use thiserror::Error;

use crate::isa::{KernelKind, NUM_SLOTS};
use crate::kernels::{self, Exec, Kernel, Streams, STREAMS_PER_SLOT};

pub const DEFAULT_MEMORY_WORDS: u32 = 65536;
pub const DEFAULT_STALL_THRESHOLD: u32 = 512;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimFault {
    #[error("memory access out of bounds: word {addr} (size {size})")]
    MemOutOfBounds { addr: u32, size: u32 },
    #[error("slot {slot}: {message}")]
    Kernel { slot: usize, message: String },
}

/// Per-kind, per-opcode issue-to-result latency in cycles (minimum 1).
#[derive(Debug, Clone)]
pub struct LatencyTable {
    map: HashMap<(KernelKind, u8), u32>,
}

impl Default for LatencyTable {
    fn default() -> Self {
        use crate::kernels::{cnn, fp, sha3};
        let mut map = HashMap::new();
        let mut put = |kind, op, lat| {
            map.insert((kind, op), lat);
        };
        put(KernelKind::Fmav, fp::FMAV_ADD, 3);
        put(KernelKind::Fmav, fp::FMAV_SUB, 3);
        put(KernelKind::Fmav, fp::FMAV_MUL, 3);
        put(KernelKind::Fmav, fp::FMAV_SUBSQ_ACC, 4);
        put(KernelKind::Fmav, fp::FMAV_MAC, 4);
        put(KernelKind::Div, 1, 16);
        put(KernelKind::Sqrt, 1, 16);
        put(KernelKind::CnnMac, cnn::MAC_MAC_CH, 2);
        put(KernelKind::CnnSum, cnn::SUM_SUM_STEP, 2);
        put(KernelKind::ShaComp, sha3::COMP_ROUND, 2);
        LatencyTable { map }
    }
}

impl LatencyTable {
    pub fn get(&self, kind: KernelKind, op: u8) -> u32 {
        self.map.get(&(kind, op)).copied().unwrap_or(1).max(1)
    }

    pub fn set(&mut self, kind: KernelKind, op: u8, latency: u32) {
        self.map.insert((kind, op), latency.max(1));
    }
}

/// One fabric slot: the resident kernel plus its latched external signals
/// and busy/pending issue state.
pub struct SlotState {
    pub kind: KernelKind,
    pub kernel: Box<dyn Kernel>,
    /// Latched 32-bit output, readable by other slots as SLOT_OUT.
    pub out: u32,
    /// Latched 2-bit control signal, readable by the controller.
    pub ctrl: u8,
    /// Latched error line.
    pub error: bool,
    /// Remaining cycles until the in-flight op's result latches; 0 = idle.
    pub busy: u32,
    pending: Option<Exec>,
    pub streams: Streams,
}

impl SlotState {
    fn new(kind: KernelKind) -> Self {
        SlotState {
            kind,
            kernel: kernels::instantiate(kind),
            out: 0,
            ctrl: 0,
            error: false,
            busy: 0,
            pending: None,
            streams: Default::default(),
        }
    }

    pub fn is_busy(&self) -> bool {
        self.busy > 0
    }
}

pub struct Fabric {
    pub slots: [SlotState; NUM_SLOTS],
    pub memory: Vec<u32>,
    pub latency: LatencyTable,
}

impl Fabric {
    pub fn new(bindings: [KernelKind; NUM_SLOTS], memory_words: u32, latency: LatencyTable) -> Self {
        Fabric {
            slots: bindings.map(SlotState::new),
            memory: vec![0; memory_words as usize],
            latency,
        }
    }

    /// Rebind a slot to a new kernel kind, resetting all its state.
    pub fn bind_slot(&mut self, slot: usize, kind: KernelKind) {
        self.slots[slot] = SlotState::new(kind);
    }

    pub fn mem_read(&self, addr: u32) -> Result<u32, SimFault> {
        self.memory.get(addr as usize).copied().ok_or(SimFault::MemOutOfBounds {
            addr,
            size: self.memory.len() as u32,
        })
    }

    pub fn mem_write(&mut self, addr: u32, value: u32) -> Result<(), SimFault> {
        let size = self.memory.len() as u32;
        match self.memory.get_mut(addr as usize) {
            Some(w) => {
                *w = value;
                Ok(())
            }
            None => Err(SimFault::MemOutOfBounds { addr, size }),
        }
    }

    /// Push one word into a slot's stream FIFO.
    pub fn stream_push(&mut self, slot: usize, channel: usize, word: u32) {
        assert!(channel < STREAMS_PER_SLOT);
        self.slots[slot].streams[channel].push_back(word);
    }

    /// True if issuing `op` to `slot` would stall this cycle: the slot is
    /// still busy, or the kernel is waiting on stream data.
    pub fn would_stall(&self, slot: usize, op: u8) -> bool {
        let s = &self.slots[slot];
        s.is_busy() || s.kernel.would_stall(op, &s.streams)
    }

    /// Issue `op` on a slot. The kernel executes eagerly; the result is
    /// returned to the caller (for same-cycle memory writeback) but only
    /// latches into out/ctrl/error once `latency` cycles have ticked.
    /// Caller must have checked `would_stall`.
    pub fn issue(&mut self, slot: usize, op: u8, a: u32, b: u32) -> Result<Exec, SimFault> {
        let lat = self.latency.get(self.slots[slot].kind, op);
        let s = &mut self.slots[slot];
        debug_assert!(!s.is_busy());
        let exec = s
            .kernel
            .exec(op, a, b, &mut s.streams)
            .map_err(|e| SimFault::Kernel { slot, message: e.0 })?;
        s.pending = Some(exec);
        s.busy = lat;
        Ok(exec)
    }

    /// End-of-cycle: kernels drain streams, busy counters decrement, and
    /// completed results latch into the externally visible signals.
    pub fn tick(&mut self) {
        for s in &mut self.slots {
            s.kernel.tick(&mut s.streams);
            if s.busy > 0 {
                s.busy -= 1;
                if s.busy == 0 {
                    let e = s.pending.take().expect("busy slot without pending result");
                    s.out = e.out;
                    s.ctrl = e.ctrl;
                    s.error = e.error;
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// TOML configuration

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{0}")]
    Parse(#[from] toml::de::Error),
    #[error("unknown kernel kind {0:?}")]
    UnknownKind(String),
    #[error("slots must list exactly {NUM_SLOTS} kinds, got {0}")]
    SlotCount(usize),
    #[error("unknown op {op:?} for kernel kind {kind:?}")]
    UnknownOp { kind: String, op: String },
    #[error("latency must be at least 1")]
    ZeroLatency,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct FabricFileConfig {
    memory_words: Option<u32>,
    stall_threshold: Option<u32>,
    slots: Option<Vec<String>>,
    #[serde(default)]
    latency: HashMap<String, HashMap<String, u32>>,
}

/// A parsed fabric configuration, ready to instantiate.
#[derive(Debug, Clone)]
pub struct FabricConfig {
    pub memory_words: u32,
    pub stall_threshold: u32,
    pub slots: Option<[KernelKind; NUM_SLOTS]>,
    pub latency: LatencyTable,
}

impl Default for FabricConfig {
    fn default() -> Self {
        FabricConfig {
            memory_words: DEFAULT_MEMORY_WORDS,
            stall_threshold: DEFAULT_STALL_THRESHOLD,
            slots: None,
            latency: LatencyTable::default(),
        }
    }
}

impl FabricConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let file: FabricFileConfig = toml::from_str(text)?;
        let mut cfg = FabricConfig::default();
        if let Some(m) = file.memory_words {
            cfg.memory_words = m;
        }
        if let Some(s) = file.stall_threshold {
            cfg.stall_threshold = s;
        }
        if let Some(names) = file.slots {
            if names.len() != NUM_SLOTS {
                return Err(ConfigError::SlotCount(names.len()));
            }
            let mut slots = [KernelKind::None; NUM_SLOTS];
            for (i, name) in names.iter().enumerate() {
                slots[i] = KernelKind::from_name(name)
                    .ok_or_else(|| ConfigError::UnknownKind(name.clone()))?;
            }
            cfg.slots = Some(slots);
        }
        for (kind_name, ops) in &file.latency {
            let kind = KernelKind::from_name(kind_name)
                .ok_or_else(|| ConfigError::UnknownKind(kind_name.clone()))?;
            for (op_name, &lat) in ops {
                let op = kind.op_from_mnemonic(op_name).ok_or_else(|| ConfigError::UnknownOp {
                    kind: kind_name.clone(),
                    op: op_name.clone(),
                })?;
                if lat == 0 {
                    return Err(ConfigError::ZeroLatency);
                }
                cfg.latency.set(kind, op, lat);
            }
        }
        Ok(cfg)
    }

    pub fn build(&self, bindings: [KernelKind; NUM_SLOTS]) -> Fabric {
        Fabric::new(bindings, self.memory_words, self.latency.clone())
    }
}
