//! Functional models of the accelerator kernels that can be loaded into
//! fabric slots.

use std::collections::VecDeque;

use thiserror::Error;

use crate::isa::KernelKind;

pub mod cnn;
pub mod fp;
pub mod sha3;

/// FIFO channels feeding one slot from the host side.
pub const STREAMS_PER_SLOT: usize = 4;

pub type Streams = [VecDeque<u32>; STREAMS_PER_SLOT];

/// Result of issuing one slot sub-instruction. `out`, `ctrl` and `error`
/// become externally visible only once the op's latency has elapsed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Exec {
    pub out: u32,
    /// 2-bit control signal.
    pub ctrl: u8,
    /// Error line (NaN result and similar); may raise an accelerator trap.
    pub error: bool,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{0}")]
pub struct KernelFault(pub String);

pub fn fault(msg: impl Into<String>) -> KernelFault {
    KernelFault(msg.into())
}

/// Behavior contract of a slot-resident kernel. Opcode 0 is SLOT_NOP for
/// every kind and never reaches `exec`.
pub trait Kernel {
    fn kind(&self) -> KernelKind;

    /// True if issuing `op` this cycle cannot proceed (input data not yet
    /// streamed in). The controller holds the VLIW instead of issuing.
    fn would_stall(&self, _op: u8, _streams: &Streams) -> bool {
        false
    }

    /// Execute `op` with resolved operand values. Called only when
    /// `would_stall` returned false and the slot is not busy.
    fn exec(&mut self, op: u8, a: u32, b: u32, streams: &mut Streams) -> Result<Exec, KernelFault>;

    /// End-of-cycle hook (e.g. draining stream words into line buffers).
    fn tick(&mut self, _streams: &mut Streams) {}
}

/// Inert kernel for unbound slots; any nonzero opcode is a fault.
pub struct NoneKernel;

impl Kernel for NoneKernel {
    fn kind(&self) -> KernelKind {
        KernelKind::None
    }

    fn exec(&mut self, op: u8, _a: u32, _b: u32, _s: &mut Streams) -> Result<Exec, KernelFault> {
        Err(fault(format!("opcode {op} issued to unbound slot")))
    }
}

/// Instantiate a fresh, zeroed kernel of the given kind.
pub fn instantiate(kind: KernelKind) -> Box<dyn Kernel> {
    match kind {
        KernelKind::None => Box::new(NoneKernel),
        KernelKind::Fmav => Box::new(fp::FmavKernel::default()),
        KernelKind::Div => Box::new(fp::DivKernel),
        KernelKind::Sqrt => Box::new(fp::SqrtKernel),
        KernelKind::Util => Box::new(fp::UtilKernel),
        KernelKind::CnnMac => Box::new(cnn::CnnMacKernel::default()),
        KernelKind::CnnSum => Box::new(cnn::CnnSumKernel::default()),
        KernelKind::ShaBuff => Box::new(sha3::ShaBuffKernel),
        KernelKind::ShaComp => Box::new(sha3::ShaCompKernel::default()),
    }
}
