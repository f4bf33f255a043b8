//! C interface to the cycledger simulator and probability calculators.
//!
//! Every fallible call returns a [`CycStatus`]. On failure the message of
//! the most recent error on the calling thread is available from
//! [`cyc_last_error`]. Simulations are reached through an opaque
//! [`CycSim`] handle that owns all strings it hands out.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::ptr;

use cycledger::prob;
use cycledger::sim::{self, RunConfig, SimError};

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CycStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Config = 3,
    Domain = 4,
    Simulation = 5,
}

/// Text outputs of a finished simulation.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CycOutput {
    ChainDump = 0,
    MetricsCsv = 1,
    MessagesCsv = 2,
    ReputationCsv = 3,
}

/// A finished simulation run.
pub struct CycSim {
    rounds: u64,
    blocks: u64,
    texts: [CString; 4],
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn fail(status: CycStatus, message: impl ToString) -> CycStatus {
    let text = message.to_string().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).unwrap_or_default());
    status
}

fn text(s: &str) -> CString {
    CString::new(s.replace('\0', " ")).unwrap_or_default()
}

/// Message of the last error on this thread, or an empty string. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn cyc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Runs a simulation described by `config_text` (flat `key = value` lines,
/// may be empty) with the given seed and stores a new handle in `out`.
///
/// # Safety
/// `config_text` must be NULL or a valid NUL-terminated string, and `out`
/// must be NULL or point to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn cyc_sim_run(config_text: *const c_char, seed: u64, out: *mut *mut CycSim) -> CycStatus {
    if config_text.is_null() || out.is_null() {
        return fail(CycStatus::NullPointer, "null argument");
    }
    *out = ptr::null_mut();
    let Ok(text_in) = CStr::from_ptr(config_text).to_str() else {
        return fail(CycStatus::InvalidUtf8, "config text is not UTF-8");
    };
    let mut cfg = RunConfig::default();
    if let Err(e) = cfg.apply_text(text_in) {
        return fail(CycStatus::Config, e);
    }
    cfg.seed = seed;
    let result = match sim::run(&cfg) {
        Ok(r) => r,
        Err(SimError::Config(e)) => return fail(CycStatus::Config, e),
        Err(e) => return fail(CycStatus::Simulation, e),
    };
    let handle = CycSim {
        rounds: result.reports.len() as u64,
        blocks: result.reports.iter().filter(|r| r.block.is_some()).count() as u64,
        texts: [
            text(&result.chain_dump),
            text(&result.metrics_csv),
            text(&result.messages_csv),
            text(&result.reputation_csv),
        ],
    };
    *out = Box::into_raw(Box::new(handle));
    CycStatus::Ok
}

/// Number of simulated rounds, or 0 for a NULL handle.
///
/// # Safety
/// `sim` must be NULL or a handle from [`cyc_sim_run`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cyc_sim_rounds(sim: *const CycSim) -> u64 {
    sim.as_ref().map_or(0, |s| s.rounds)
}

/// Number of rounds that released a block, or 0 for a NULL handle.
///
/// # Safety
/// As for [`cyc_sim_rounds`].
#[no_mangle]
pub unsafe extern "C" fn cyc_sim_blocks(sim: *const CycSim) -> u64 {
    sim.as_ref().map_or(0, |s| s.blocks)
}

/// Borrowed NUL-terminated text owned by the handle, or NULL for a NULL
/// handle. Valid until [`cyc_sim_free`].
///
/// # Safety
/// As for [`cyc_sim_rounds`].
#[no_mangle]
pub unsafe extern "C" fn cyc_sim_output(sim: *const CycSim, which: CycOutput) -> *const c_char {
    match sim.as_ref() {
        Some(s) => s.texts[which as usize].as_ptr(),
        None => ptr::null(),
    }
}

/// Releases a handle. NULL is ignored.
///
/// # Safety
/// `sim` must be NULL or a handle from [`cyc_sim_run`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cyc_sim_free(sim: *mut CycSim) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

unsafe fn store(out: *mut f64, value: Result<f64, prob::DomainError>) -> CycStatus {
    if out.is_null() {
        return fail(CycStatus::NullPointer, "null output pointer");
    }
    match value {
        Ok(v) => {
            *out = v;
            CycStatus::Ok
        }
        Err(e) => fail(CycStatus::Domain, e),
    }
}

/// Probability that a committee of `c` drawn from `n` nodes, `t` of them
/// corrupted, holds at least half corrupted members.
///
/// # Safety
/// `out` must be NULL or point to a writable double.
#[no_mangle]
pub unsafe extern "C" fn cyc_hypergeom_tail(n: u64, t: u64, c: u64, out: *mut f64) -> CycStatus {
    store(out, prob::hypergeom_tail(n, t, c))
}

/// e^(-c/12).
#[no_mangle]
pub extern "C" fn cyc_chernoff_bound(c: f64) -> f64 {
    prob::chernoff_bound(c)
}

/// f^lambda for a partial set whose members are each corrupted with
/// probability `f`.
///
/// # Safety
/// `out` must be NULL or point to a writable double.
#[no_mangle]
pub unsafe extern "C" fn cyc_partial_set_failure(f: f64, lambda: u32, out: *mut f64) -> CycStatus {
    store(out, prob::partial_set_failure(f, lambda))
}

/// m(e^(-c/12) + (1/3)^lambda).
#[no_mangle]
pub extern "C" fn cyc_round_failure(m: u32, c: f64, lambda: u32) -> f64 {
    prob::round_failure(m, c, lambda)
}

/// Empirical committee failure rate over `trials` seeded samples.
///
/// # Safety
/// `out` must be NULL or point to a writable double.
#[no_mangle]
pub unsafe extern "C" fn cyc_monte_carlo_committee(
    n: u64,
    t: u64,
    c: u64,
    trials: u64,
    seed: u64,
    out: *mut f64,
) -> CycStatus {
    store(out, prob::monte_carlo_committee(n, t, c, trials, seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn domain_errors_set_the_message() {
        let mut v = 0.0;
        let s = unsafe { cyc_hypergeom_tail(10, 11, 3, &mut v) };
        assert_eq!(s, CycStatus::Domain);
        let msg = unsafe { CStr::from_ptr(cyc_last_error()) }.to_str().unwrap();
        assert!(msg.contains("n=10"), "{msg}");
    }

    #[test]
    fn null_handle_accessors_are_harmless() {
        unsafe {
            assert_eq!(cyc_sim_rounds(ptr::null()), 0);
            assert!(cyc_sim_output(ptr::null(), CycOutput::ChainDump).is_null());
            cyc_sim_free(ptr::null_mut());
        }
    }
}
