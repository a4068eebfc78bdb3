//! Core library for the reconfigurable-fabric microcode toolchain: ISA
//! encoding, assembler/disassembler, cycle-level simulator, kernel models
//! and benchmark program generators.

pub mod asm;
pub mod benchmarks;
pub mod controller;
pub mod fabric;
pub mod isa;
pub mod kernels;

pub use controller::{
    ControllerConfig, FlowDecision, Machine, ParamSet, RunOutcome, StepEvent, Trap, TrapKind,
};
pub use fabric::{Fabric, FabricConfig, LatencyTable, SimFault};
pub use isa::{
    decode_vliw, encode_vliw, validate_program, FlowOp, FlowOpcode, KernelKind, ProgramImage, Vliw,
};
