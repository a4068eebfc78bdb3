//! Shallow-water-equation benchmark: edge-local Riemann solvers (FWave for
//! wet-wet edges, HLLE with wall reflection for wet/dry edges), a reference
//! oracle mirroring the SI's binary32 dataflow, and the microcode generator
//! with a runtime wet/dry dispatch.

use serde::{Deserialize, Serialize};

use crate::isa::ProgramImage;

use super::builder::{Asm, GenError};

pub const DRY_TOL: f32 = 1e-4;
pub const GRAVITY: f32 = 9.81;

// fabric memory map
pub const ADDR_INPUT: u32 = 0; // h_l, hu_l, b_l, h_r, hu_r, b_r
pub const ADDR_ZERO: u32 = 8;
pub const ADDR_HALF: u32 = 9;
pub const ADDR_TOL: u32 = 10;
pub const ADDR_G: u32 = 11;
/// updL_h, updL_hu, updR_h, updR_hu, max_speed
pub const ADDR_RESULT: u32 = 16;
const SCRATCH: u32 = 32;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RiemannProblem {
    pub h_l: f32,
    pub hu_l: f32,
    pub b_l: f32,
    pub h_r: f32,
    pub hu_r: f32,
    pub b_r: f32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweResult {
    /// Net update (height, momentum) applied to the left cell.
    pub upd_l: [f32; 2],
    /// Net update applied to the right cell.
    pub upd_r: [f32; 2],
    pub max_speed: f32,
}

impl SweResult {
    pub const ZERO: SweResult = SweResult {
        upd_l: [0.0; 2],
        upd_r: [0.0; 2],
        max_speed: 0.0,
    };

    pub fn as_array(&self) -> [f32; 5] {
        [self.upd_l[0], self.upd_l[1], self.upd_r[0], self.upd_r[1], self.max_speed]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WetDry {
    WetWet,
    /// Left wet, right dry.
    WetDry,
    /// Left dry, right wet.
    DryWet,
    DryDry,
}

pub fn classify(p: &RiemannProblem) -> WetDry {
    let dry_l = p.h_l <= DRY_TOL;
    let dry_r = p.h_r <= DRY_TOL;
    match (dry_l, dry_r) {
        (false, false) => WetDry::WetWet,
        (false, true) => WetDry::WetDry,
        (true, false) => WetDry::DryWet,
        (true, true) => WetDry::DryDry,
    }
}

// min/max with the UTIL kernel's semantics (non-NaN inputs here)
fn min_f(a: f32, b: f32) -> f32 {
    if a > b {
        b
    } else {
        a
    }
}

fn max_f(a: f32, b: f32) -> f32 {
    if a < b {
        b
    } else {
        a
    }
}

/// Flux-difference decomposition into two waves plus sign-based update
/// assignment, evaluated in the exact binary32 operation order of the SI
/// microcode. `einfeldt` selects the HLLE wave speeds; otherwise the Roe
/// speeds of the FWave solver are used.
fn decomposition(hl: f32, hul: f32, bl: f32, hr: f32, hur: f32, br: f32, einfeldt: bool) -> SweResult {
    decomposition_waves(hl, hul, bl, hr, hur, br, einfeldt, None)
}

/// The two waves and the flux difference they decompose, for residual
/// checks: alpha[k] * (1, lambda[k]) summed over k reconstructs flux_delta.
#[derive(Debug, Clone, Copy, Default)]
pub struct WaveParts {
    pub alpha: [f32; 2],
    pub lambda: [f32; 2],
    pub flux_delta: [f32; 2],
}

/// FWave wave decomposition of a wet-wet problem, exposing the raw waves.
pub fn ref_fwave_waves(p: &RiemannProblem) -> Result<WaveParts, DryError> {
    if classify(p) != WetDry::WetWet {
        return Err(DryError);
    }
    let mut w = WaveParts::default();
    decomposition_waves(p.h_l, p.hu_l, p.b_l, p.h_r, p.hu_r, p.b_r, false, Some(&mut w));
    Ok(w)
}

#[allow(clippy::too_many_arguments)]
fn decomposition_waves(
    hl: f32,
    hul: f32,
    bl: f32,
    hr: f32,
    hur: f32,
    br: f32,
    einfeldt: bool,
    waves_out: Option<&mut WaveParts>,
) -> SweResult {
    let ul = hul / hl;
    let ur = hur / hr;
    let sqhl = hl.sqrt();
    let sqhr = hr.sqrt();
    let hsum = hl + hr;
    let h_roe = hsum * 0.5;
    let t1 = ul * sqhl;
    let t2 = ur * sqhr;
    let num = t1 + t2;
    let den = sqhl + sqhr;
    let u_roe = num / den;
    let gh = GRAVITY * h_roe;
    let c_roe = gh.sqrt();
    let l1_roe = u_roe - c_roe;
    let l2_roe = u_roe + c_roe;
    let (l1, l2) = if einfeldt {
        let tl = GRAVITY * hl;
        let cl = tl.sqrt();
        let el = ul - cl;
        let tr = GRAVITY * hr;
        let cr = tr.sqrt();
        let er = ur + cr;
        (min_f(el, l1_roe), max_f(er, l2_roe))
    } else {
        (l1_roe, l2_roe)
    };
    let df1 = hur - hul;
    let mfl = hul * ul;
    let mfr = hur * ur;
    let dmf = mfr - mfl;
    let dh = hr - hl;
    let db = br - bl;
    let dhb = dh + db;
    // grouped bathymetry source term: exactly zero for lake-at-rest data
    let src = gh * dhb;
    let df2 = dmf + src;
    let dl = l2 - l1;
    let t3 = l2 * df1;
    let a1n = t3 - df2;
    let alpha1 = a1n / dl;
    let t4 = l1 * df1;
    let a2n = df2 - t4;
    let alpha2 = a2n / dl;
    let z1 = alpha1 * l1;
    let z2 = alpha2 * l2;

    if let Some(w) = waves_out {
        *w = WaveParts {
            alpha: [alpha1, alpha2],
            lambda: [l1, l2],
            flux_delta: [df1, df2],
        };
    }

    let mut r = SweResult::ZERO;
    for (alpha, lam, z) in [(alpha1, l1, z1), (alpha2, l2, z2)] {
        if lam < 0.0 {
            r.upd_l[0] += alpha;
            r.upd_l[1] += z;
        } else if lam > 0.0 {
            r.upd_r[0] += alpha;
            r.upd_r[1] += z;
        }
    }
    r.max_speed = max_f(l1.abs(), l2.abs());
    r
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("FWave solver requires both cells wet")]
pub struct DryError;

/// FWave solver reference. Both cells must be wet.
pub fn ref_swe_fwave(p: &RiemannProblem) -> Result<SweResult, DryError> {
    if classify(p) != WetDry::WetWet {
        return Err(DryError);
    }
    Ok(decomposition(p.h_l, p.hu_l, p.b_l, p.h_r, p.hu_r, p.b_r, false))
}

/// HLLE solver reference with the wall-reflection wet/dry convention:
/// the dry side is replaced by the mirrored wet state (h' = h_wet,
/// hu' = 0.0 - hu_wet, b' = b_wet) and no update flows into the dry cell.
pub fn ref_swe_hlle(p: &RiemannProblem) -> SweResult {
    match classify(p) {
        WetDry::DryDry => SweResult::ZERO,
        WetDry::WetDry => {
            let mut r = decomposition(p.h_l, p.hu_l, p.b_l, p.h_l, 0.0 - p.hu_l, p.b_l, true);
            r.upd_r = [0.0; 2];
            r
        }
        WetDry::DryWet => {
            let mut r = decomposition(p.h_r, 0.0 - p.hu_r, p.b_r, p.h_r, p.hu_r, p.b_r, true);
            r.upd_l = [0.0; 2];
            r
        }
        WetDry::WetWet => decomposition(p.h_l, p.hu_l, p.b_l, p.h_r, p.hu_r, p.b_r, true),
    }
}

/// The SI's own dispatch: FWave for wet-wet, HLLE for anything dry.
pub fn ref_swe_dispatch(p: &RiemannProblem) -> SweResult {
    match classify(p) {
        WetDry::WetWet => ref_swe_fwave(p).unwrap(),
        _ => ref_swe_hlle(p),
    }
}

// ---------------------------------------------------------------------------
// microcode generator

/// VLIW index ranges [start, end) of each solver body, for trace-based
/// dispatch assertions.
#[derive(Debug, Clone, Copy)]
pub struct SweMarkers {
    pub fwave: (u32, u32),
    pub rdry: (u32, u32),
    pub ldry: (u32, u32),
    pub ddry: (u32, u32),
}

impl SweMarkers {
    pub fn body_for_pc(&self, pc: u32) -> Option<WetDry> {
        let within = |r: (u32, u32)| pc >= r.0 && pc < r.1;
        if within(self.fwave) {
            Some(WetDry::WetWet)
        } else if within(self.rdry) {
            Some(WetDry::WetDry)
        } else if within(self.ldry) {
            Some(WetDry::DryWet)
        } else if within(self.ddry) {
            Some(WetDry::DryDry)
        } else {
            None
        }
    }
}

struct SweGen {
    a: Asm,
    scratch: u32,
    fmav_rr: usize,
}

// input/const addresses used by the emitters
const HL: u32 = 0;
const HUL: u32 = 1;
const BL: u32 = 2;
const HR: u32 = 3;
const HUR: u32 = 4;
const BR: u32 = 5;

impl SweGen {
    fn tmp(&mut self) -> u32 {
        let t = self.scratch;
        self.scratch += 1;
        t
    }

    /// Three-address compute op: AGU setup then one compute VLIW.
    fn op3(&mut self, slot: usize, mnem: &str, x: u32, y: u32, t: u32) {
        self.a.agu_set(0, x);
        self.a.agu_set(1, y);
        self.a.agu_set(2, t);
        self.a.stmt(format!("slot{slot}: {mnem} mem[a0], mem[a1] -> mem[a2]"));
    }

    fn op2(&mut self, slot: usize, mnem: &str, x: u32, t: u32) {
        self.a.agu_set(0, x);
        self.a.agu_set(2, t);
        self.a.stmt(format!("slot{slot}: {mnem} mem[a0] -> mem[a2]"));
    }

    fn fmav(&mut self, mnem: &str, x: u32, y: u32) -> u32 {
        let t = self.tmp();
        let slot = self.fmav_rr;
        self.fmav_rr ^= 1;
        self.op3(slot, mnem, x, y, t);
        t
    }

    fn add(&mut self, x: u32, y: u32) -> u32 {
        self.fmav("ADD", x, y)
    }

    fn sub(&mut self, x: u32, y: u32) -> u32 {
        self.fmav("SUB", x, y)
    }

    fn mul(&mut self, x: u32, y: u32) -> u32 {
        self.fmav("MUL", x, y)
    }

    fn div(&mut self, x: u32, y: u32) -> u32 {
        let t = self.tmp();
        self.op3(2, "DIV", x, y, t);
        t
    }

    fn sqrt(&mut self, x: u32) -> u32 {
        let t = self.tmp();
        self.op2(3, "SQRT", x, t);
        t
    }

    fn util(&mut self, mnem: &str, x: u32, y: u32, t: u32) {
        self.op3(4, mnem, x, y, t);
    }

    /// Bit-exact move via UTIL MAX(x, x).
    fn mov(&mut self, x: u32, t: u32) {
        self.util("MAX", x, x, t);
    }

    /// Compare two memory words on the UTIL slot (latches the 2-bit signal).
    fn cmp(&mut self, x: u32, y: u32) {
        self.a.agu_set(0, x);
        self.a.agu_set(1, y);
        self.a.stmt("slot4: CMP mem[a0], mem[a1]");
    }

    /// Jump to `label` when h at `addr` is dry (h <= TOL: signal LT or EQ).
    fn jif_dry(&mut self, addr: u32, label: &str) {
        self.cmp(addr, ADDR_TOL);
        self.a.jif_sig_eq(3, 4, 1, label); // h < tol
        self.a.jif_sig_eq(3, 4, 0, label); // h == tol
    }

    /// Add `alpha`/`z` into the left or right updates by the sign of `lam`.
    fn assign_wave(&mut self, alpha: u32, lam: u32, z: u32) {
        let left = self.a.fresh_label("WL");
        let right = self.a.fresh_label("WR");
        let done = self.a.fresh_label("WD");
        self.cmp(lam, ADDR_ZERO);
        self.a.jif_sig_eq(3, 4, 1, &left); // lam < 0
        self.a.jif_sig_eq(3, 4, 2, &right); // lam > 0
        self.a.goto(3, &done);
        self.a.bind(&left);
        self.op3(0, "ADD", ADDR_RESULT, alpha, ADDR_RESULT);
        self.op3(1, "ADD", ADDR_RESULT + 1, z, ADDR_RESULT + 1);
        self.a.goto(3, &done);
        self.a.bind(&right);
        self.op3(0, "ADD", ADDR_RESULT + 2, alpha, ADDR_RESULT + 2);
        self.op3(1, "ADD", ADDR_RESULT + 3, z, ADDR_RESULT + 3);
        self.a.bind(&done);
    }

    /// The shared wave decomposition; mirrors `decomposition` above
    /// operation for operation. Writes updates and max_speed to the result
    /// words.
    fn emit_decomposition(&mut self, hl: u32, hul: u32, bl: u32, hr: u32, hur: u32, br: u32, einfeldt: bool) {
        // zero the four update accumulators
        for i in 0..4 {
            self.mov(ADDR_ZERO, ADDR_RESULT + i);
        }
        let ul = self.div(hul, hl);
        let ur = self.div(hur, hr);
        let sqhl = self.sqrt(hl);
        let sqhr = self.sqrt(hr);
        let hsum = self.add(hl, hr);
        let h_roe = self.mul(hsum, ADDR_HALF);
        let t1 = self.mul(ul, sqhl);
        let t2 = self.mul(ur, sqhr);
        let num = self.add(t1, t2);
        let den = self.add(sqhl, sqhr);
        let u_roe = self.div(num, den);
        let gh = self.mul(ADDR_G, h_roe);
        let c_roe = self.sqrt(gh);
        let l1_roe = self.sub(u_roe, c_roe);
        let l2_roe = self.add(u_roe, c_roe);
        let (l1, l2) = if einfeldt {
            let tl = self.mul(ADDR_G, hl);
            let cl = self.sqrt(tl);
            let el = self.sub(ul, cl);
            let tr = self.mul(ADDR_G, hr);
            let cr = self.sqrt(tr);
            let er = self.add(ur, cr);
            let sl = self.tmp();
            self.util("MIN", el, l1_roe, sl);
            let sr = self.tmp();
            self.util("MAX", er, l2_roe, sr);
            (sl, sr)
        } else {
            (l1_roe, l2_roe)
        };
        let df1 = self.sub(hur, hul);
        let mfl = self.mul(hul, ul);
        let mfr = self.mul(hur, ur);
        let dmf = self.sub(mfr, mfl);
        let dh = self.sub(hr, hl);
        let db = self.sub(br, bl);
        let dhb = self.add(dh, db);
        let src = self.mul(gh, dhb);
        let df2 = self.add(dmf, src);
        let dl = self.sub(l2, l1);
        let t3 = self.mul(l2, df1);
        let a1n = self.sub(t3, df2);
        let alpha1 = self.div(a1n, dl);
        let t4 = self.mul(l1, df1);
        let a2n = self.sub(df2, t4);
        let alpha2 = self.div(a2n, dl);
        let z1 = self.mul(alpha1, l1);
        let z2 = self.mul(alpha2, l2);
        self.assign_wave(alpha1, l1, z1);
        self.assign_wave(alpha2, l2, z2);
        let ab1 = self.tmp();
        self.op2(4, "ABS", l1, ab1);
        let ab2 = self.tmp();
        self.op2(4, "ABS", l2, ab2);
        self.util("MAX", ab1, ab2, ADDR_RESULT + 4);
    }
}

/// Generate the SWE edge-solve SI: classification, dispatch, and all four
/// solver bodies. Slot layout: FMAV, FMAV, DIV, SQRT, UTIL.
pub fn gen_swe_program(p: &RiemannProblem) -> Result<(ProgramImage, SweMarkers), GenError> {
    let mut g = SweGen {
        a: Asm::new(),
        scratch: SCRATCH,
        fmav_rr: 0,
    };
    g.a.slotbind(0, "FMAV");
    g.a.slotbind(1, "FMAV");
    g.a.slotbind(2, "DIV");
    g.a.slotbind(3, "SQRT");
    g.a.slotbind(4, "UTIL");
    let inputs = [p.h_l, p.hu_l, p.b_l, p.h_r, p.hu_r, p.b_r];
    for v in inputs {
        g.a.word(v.to_bits());
    }
    g.a.dir(".word 0"); // 6
    g.a.dir(".word 0"); // 7
    g.a.word(0f32.to_bits());
    g.a.word(0.5f32.to_bits());
    g.a.word(DRY_TOL.to_bits());
    g.a.word(GRAVITY.to_bits());

    // dispatch
    g.jif_dry(HL, "LCHK");
    g.jif_dry(HR, "RDRY");
    g.a.goto(3, "FWAVE");
    g.a.bind("LCHK");
    g.jif_dry(HR, "DDRY");
    g.a.goto(3, "LDRY");

    // FWave body (wet-wet)
    g.a.bind("FWAVE");
    let fw_start = g.a.here();
    g.emit_decomposition(HL, HUL, BL, HR, HUR, BR, false);
    g.a.goto(3, "END");
    let fw_end = g.a.here();

    // HLLE, right cell dry: wall reflection of the left state
    g.a.bind("RDRY");
    let rd_start = g.a.here();
    let rh = g.tmp();
    g.mov(HL, rh);
    let rhu = g.sub(ADDR_ZERO, HUL);
    let rb = g.tmp();
    g.mov(BL, rb);
    g.emit_decomposition(HL, HUL, BL, rh, rhu, rb, true);
    g.mov(ADDR_ZERO, ADDR_RESULT + 2);
    g.mov(ADDR_ZERO, ADDR_RESULT + 3);
    g.a.goto(3, "END");
    let rd_end = g.a.here();

    // HLLE, left cell dry
    g.a.bind("LDRY");
    let ld_start = g.a.here();
    let lh = g.tmp();
    g.mov(HR, lh);
    let lhu = g.sub(ADDR_ZERO, HUR);
    let lb = g.tmp();
    g.mov(BR, lb);
    g.emit_decomposition(lh, lhu, lb, HR, HUR, BR, true);
    g.mov(ADDR_ZERO, ADDR_RESULT);
    g.mov(ADDR_ZERO, ADDR_RESULT + 1);
    g.a.goto(3, "END");
    let ld_end = g.a.here();

    // both dry: all-zero result
    g.a.bind("DDRY");
    let dd_start = g.a.here();
    for i in 0..5 {
        g.mov(ADDR_ZERO, ADDR_RESULT + i);
    }
    let dd_end = g.a.here();
    // fall through to END
    g.a.bind("END");
    g.a.stmt("nop");

    let markers = SweMarkers {
        fwave: (fw_start, fw_end),
        rdry: (rd_start, rd_end),
        ldry: (ld_start, ld_end),
        ddry: (dd_start, dd_end),
    };
    Ok((g.a.assemble()?.image, markers))
}

pub fn read_si_result(memory: &[u32]) -> SweResult {
    let w = |i: u32| f32::from_bits(memory[(ADDR_RESULT + i) as usize]);
    SweResult {
        upd_l: [w(0), w(1)],
        upd_r: [w(2), w(3)],
        max_speed: w(4),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controller::{ControllerConfig, Machine, TrapKind};
    use crate::fabric::FabricConfig;

    fn wet(h_l: f32, hu_l: f32, h_r: f32, hu_r: f32) -> RiemannProblem {
        RiemannProblem {
            h_l,
            hu_l,
            b_l: 0.0,
            h_r,
            hu_r,
            b_r: 0.0,
        }
    }

    fn run_si(p: &RiemannProblem) -> (SweResult, Vec<u16>) {
        let (img, _) = gen_swe_program(p).unwrap();
        let mut m = Machine::boot(&img, ControllerConfig::default(), &FabricConfig::default()).unwrap();
        let mut pcs = Vec::new();
        let out = m
            .run_with_trace(|r| {
                if r.event == "RETIRED" {
                    pcs.push(r.pc);
                }
            })
            .unwrap();
        assert!(out.trap.is_none(), "trap: {:?}", out.trap);
        (read_si_result(&m.fabric.memory), pcs)
    }

    #[test]
    fn oracle_identical_states_zero_updates() {
        let r = ref_swe_fwave(&wet(2.0, 1.0, 2.0, 1.0)).unwrap();
        assert_eq!(r.upd_l, [0.0; 2]);
        assert_eq!(r.upd_r, [0.0; 2]);
        assert!(r.max_speed > 0.0);
    }

    #[test]
    fn oracle_rejects_dry_input() {
        assert_eq!(ref_swe_fwave(&wet(0.0, 0.0, 1.0, 0.0)), Err(DryError));
    }

    #[test]
    fn oracle_dry_dry_is_zero() {
        assert_eq!(ref_swe_hlle(&wet(0.0, 0.0, 0.0, 0.0)), SweResult::ZERO);
    }

    #[test]
    fn oracle_lake_at_rest_is_well_balanced() {
        // water level w = h + b constant, hu = 0; b = 2 - h is exact in f32
        for h in [1.0f32, 1.25, 1.5, 1.75, 2.0] {
            let p = RiemannProblem {
                h_l: h,
                hu_l: 0.0,
                b_l: 2.0 - h,
                h_r: 1.5,
                hu_r: 0.0,
                b_r: 0.5,
            };
            let r = ref_swe_fwave(&p).unwrap();
            assert_eq!(r.upd_l, [0.0; 2], "h={h}");
            assert_eq!(r.upd_r, [0.0; 2], "h={h}");
        }
    }

    #[test]
    fn oracle_hlle_close_to_fwave_on_smooth_states() {
        for i in 0..50 {
            let h = 1.0 + i as f32 * 0.01;
            let p = wet(h, 0.3, h * 1.001, 0.3);
            let f = ref_swe_fwave(&p).unwrap().as_array();
            let e = ref_swe_hlle(&p).as_array();
            for (x, y) in f.iter().zip(&e) {
                let scale = x.abs().max(1.0);
                assert!((x - y).abs() <= 1e-3 * scale, "{f:?} vs {e:?}");
            }
        }
    }

    #[test]
    fn oracle_decomposition_residual_bounded() {
        // 1000 pseudo-random wet problems: the two waves reconstruct the
        // flux difference to within 1e-6 relative
        let mut s = 0x2468aceu32;
        let mut next = move || {
            s = s.wrapping_mul(1664525).wrapping_add(1013904223);
            (s >> 8) as f32 / (1u32 << 24) as f32
        };
        for _ in 0..1000 {
            let p = RiemannProblem {
                h_l: 0.01 + 10.0 * next(),
                hu_l: 8.0 * next() - 4.0,
                b_l: 2.0 * next() - 1.0,
                h_r: 0.01 + 10.0 * next(),
                hu_r: 8.0 * next() - 4.0,
                b_r: 2.0 * next() - 1.0,
            };
            let w = ref_fwave_waves(&p).unwrap();
            let sum = [
                w.alpha[0] as f64 + w.alpha[1] as f64,
                w.alpha[0] as f64 * w.lambda[0] as f64 + w.alpha[1] as f64 * w.lambda[1] as f64,
            ];
            let r0 = sum[0] - w.flux_delta[0] as f64;
            let r1 = sum[1] - w.flux_delta[1] as f64;
            let resid = (r0 * r0 + r1 * r1).sqrt();
            let scale = ((w.flux_delta[0] as f64).powi(2) + (w.flux_delta[1] as f64).powi(2))
                .sqrt()
                .max(1.0);
            assert!(resid <= 1e-6 * scale, "{p:?}: resid {resid} vs {scale}");
        }
    }

    #[test]
    fn oracle_wet_dry_no_flow_into_dry_cell() {
        for hu in [-2.0f32, -0.5, 0.0, 0.5, 2.0] {
            let r = ref_swe_hlle(&wet(1.0, hu, 0.0, 0.0));
            assert_eq!(r.upd_r, [0.0; 2]);
        }
    }

    #[test]
    fn si_matches_oracle_wet_wet() {
        let cases = [
            wet(1.0, 0.0, 2.0, 0.0),
            wet(2.5, 1.5, 0.5, -0.3),
            wet(1.0, -1.0, 1.0, 1.0),
            RiemannProblem {
                h_l: 1.2,
                hu_l: 0.4,
                b_l: -0.5,
                h_r: 0.9,
                hu_r: -0.2,
                b_r: -0.25,
            },
        ];
        for p in cases {
            let want = ref_swe_fwave(&p).unwrap().as_array();
            let (got, _) = run_si(&p);
            for (g, w) in got.as_array().iter().zip(&want) {
                assert_eq!(g.to_bits(), w.to_bits(), "got {got:?} want {want:?}");
            }
        }
    }

    #[test]
    fn si_dispatches_to_classified_body() {
        let cases = [
            (wet(1.0, 0.2, 1.5, -0.1), WetDry::WetWet),
            (wet(1.0, 0.2, 0.0, 0.0), WetDry::WetDry),
            (wet(0.0, 0.0, 1.5, -0.1), WetDry::DryWet),
            (wet(0.0, 0.0, 0.0, 0.0), WetDry::DryDry),
        ];
        for (p, want) in cases {
            let (img, markers) = gen_swe_program(&p).unwrap();
            let mut m =
                Machine::boot(&img, ControllerConfig::default(), &FabricConfig::default()).unwrap();
            let mut bodies = Vec::new();
            let out = m
                .run_with_trace(|r| {
                    if r.event == "RETIRED" {
                        if let Some(b) = markers.body_for_pc(r.pc as u32) {
                            bodies.push(b);
                        }
                    }
                })
                .unwrap();
            assert!(out.trap.is_none());
            assert!(!bodies.is_empty(), "no body PCs for {want:?}");
            assert!(bodies.iter().all(|&b| b == want), "{p:?} visited {bodies:?}");
            // and the result matches the dispatching oracle bit-for-bit
            let got = read_si_result(&m.fabric.memory).as_array();
            let oracle = ref_swe_dispatch(&p).as_array();
            for (g, w) in got.iter().zip(&oracle) {
                assert_eq!(g.to_bits(), w.to_bits(), "{p:?}: got {got:?} want {oracle:?}");
            }
        }
    }

    #[test]
    fn si_nan_height_traps_accelerator_error() {
        let p = wet(f32::NAN, 0.0, 1.0, 0.0);
        let (img, _) = gen_swe_program(&p).unwrap();
        let mut m = Machine::boot(&img, ControllerConfig::default(), &FabricConfig::default()).unwrap();
        let out = m.run().unwrap();
        match out.trap.expect("expected trap").kind {
            TrapKind::AcceleratorError { slot, .. } => assert_eq!(slot, 4),
            k => panic!("unexpected {k:?}"),
        }
    }
}
