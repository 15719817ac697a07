//! C ABI over the `ptypes` library.
//!
//! Objects are opaque handles created by `*_new` and released by `*_free`.
//! Every fallible call returns a [`PtStatus`]; on failure the message is
//! kept per thread and can be copied out with [`pt_last_error_message`].
//! Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::slice;

use ptypes::dist::{Channel, Distribution, RngStream};
use ptypes::info::{capacity, entropy, mutual_information, rate_distortion, relative_information, DistortionMatrix};
use ptypes::polytope::dirichlet_integral;
use ptypes::sim::{simulate_channel_coding, ChannelCodingSetup, ChannelDecoder, SimOptions};
use ptypes::theorems::{channel_coding_prediction, source_coding_exact_psuc, SourceCodingMode, SourceCodingSetup};
use ptypes::types::{ln_multinomial, stirling_log_size, SequenceType};
use ptypes::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PtStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    InstanceTooLarge = 4,
    NonConvergence = 5,
    CodebookTooLarge = 6,
    NumericalFailure = 7,
    Panic = 99,
}

/// A probability distribution.
pub struct PtDistribution(Distribution);
/// A channel matrix P(y|x).
pub struct PtChannel(Channel);
/// A distortion matrix d(x, x̂).
pub struct PtDistortion(DistortionMatrix);

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct PtCapacity {
    pub capacity_nats: f64,
    pub gap_bound: f64,
    pub iterations: u64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct PtChannelPrediction {
    pub a: f64,
    pub b: f64,
    pub p_suc_step: u8,
    pub p_suc_erfc: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct PtTrialReport {
    pub successes: u64,
    pub trials: u64,
    pub p_hat: f64,
    pub ci95_halfwidth: f64,
    pub seed: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> PtStatus {
    match e {
        Error::DimensionMismatch { .. } => PtStatus::DimensionMismatch,
        Error::InstanceTooLarge { .. } => PtStatus::InstanceTooLarge,
        Error::NonConvergence { .. } => PtStatus::NonConvergence,
        Error::CodebookTooLarge { .. } => PtStatus::CodebookTooLarge,
        Error::SingularMatrix | Error::SingularUpdate { .. } | Error::UndefinedRatio { .. } => {
            PtStatus::NumericalFailure
        }
        _ => PtStatus::InvalidArgument,
    }
}

enum Fail {
    Null,
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

fn guard<F: FnOnce() -> Result<(), Fail>>(f: F) -> PtStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            PtStatus::Ok
        }
        Ok(Err(Fail::Null)) => {
            set_error("null pointer argument".into());
            PtStatus::NullPointer
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            PtStatus::Panic
        }
    }
}

unsafe fn borrow<'a, T>(p: *const T) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null)
}

unsafe fn out<'a, T>(p: *mut T) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or(Fail::Null)
}

unsafe fn values<'a, T>(p: *const T, len: usize) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Fail::Null);
    }
    Ok(slice::from_raw_parts(p, len))
}

fn rows(flat: &[f64], cols: usize) -> Vec<Vec<f64>> {
    flat.chunks(cols.max(1)).map(<[f64]>::to_vec).collect()
}

/// Copies the calling thread's last error message, NUL-terminated, into
/// `buf` and returns the full message length (excluding NUL).
///
/// # Safety
/// `buf` must be writable for `len` bytes or null.
#[no_mangle]
pub unsafe extern "C" fn pt_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// # Safety
/// `probs` must point to `len` doubles; `out_handle` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pt_distribution_new(probs: *const f64, len: usize, out_handle: *mut *mut PtDistribution) -> PtStatus {
    guard(|| {
        let slot = out(out_handle)?;
        let d = Distribution::new(values(probs, len)?.to_vec())?;
        *slot = Box::into_raw(Box::new(PtDistribution(d)));
        Ok(())
    })
}

/// # Safety
/// `handle` must come from `pt_distribution_new` or be null.
#[no_mangle]
pub unsafe extern "C" fn pt_distribution_free(handle: *mut PtDistribution) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn pt_entropy(dist: *const PtDistribution, result: *mut f64) -> PtStatus {
    guard(|| {
        *out(result)? = entropy(&borrow(dist)?.0);
        Ok(())
    })
}

/// D(p‖q) in nats.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn pt_relative_information(
    p: *const PtDistribution,
    q: *const PtDistribution,
    result: *mut f64,
) -> PtStatus {
    guard(|| {
        *out(result)? = relative_information(&borrow(p)?.0, &borrow(q)?.0)?;
        Ok(())
    })
}

/// Builds a channel from a row-major `input_size × output_size` matrix.
///
/// # Safety
/// `matrix` must hold `input_size * output_size` doubles.
#[no_mangle]
pub unsafe extern "C" fn pt_channel_new(
    matrix: *const f64,
    input_size: usize,
    output_size: usize,
    out_handle: *mut *mut PtChannel,
) -> PtStatus {
    guard(|| {
        let slot = out(out_handle)?;
        let flat = values(matrix, input_size.saturating_mul(output_size))?;
        let c = Channel::new(rows(flat, output_size))?;
        *slot = Box::into_raw(Box::new(PtChannel(c)));
        Ok(())
    })
}

/// # Safety
/// `handle` must come from `pt_channel_new` or be null.
#[no_mangle]
pub unsafe extern "C" fn pt_channel_free(handle: *mut PtChannel) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// H(y:x) for the given input distribution.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn pt_mutual_information(
    channel: *const PtChannel,
    input: *const PtDistribution,
    result: *mut f64,
) -> PtStatus {
    guard(|| {
        let joint = ptypes::dist::joint_from(&borrow(channel)?.0, &borrow(input)?.0)?;
        *out(result)? = mutual_information(&joint);
        Ok(())
    })
}

/// Capacity by Blahut–Arimoto. `optimal_input` may be null; otherwise it
/// receives `input_len` probabilities, which must equal the input size.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn pt_capacity(
    channel: *const PtChannel,
    tol: f64,
    result: *mut PtCapacity,
    optimal_input: *mut f64,
    input_len: usize,
) -> PtStatus {
    guard(|| {
        let c = &borrow(channel)?.0;
        let slot = out(result)?;
        let r = capacity(c, tol)?;
        if !optimal_input.is_null() {
            if input_len != c.input_size() {
                return Err(Error::DimensionMismatch {
                    expected: c.input_size(),
                    found: input_len,
                }
                .into());
            }
            slice::from_raw_parts_mut(optimal_input, input_len).copy_from_slice(r.optimal_input.probs());
        }
        *slot = PtCapacity {
            capacity_nats: r.capacity_nats,
            gap_bound: r.gap_bound,
            iterations: r.iterations as u64,
        };
        Ok(())
    })
}

/// # Safety
/// `matrix` must hold `size * size` doubles.
#[no_mangle]
pub unsafe extern "C" fn pt_distortion_new(matrix: *const f64, size: usize, out_handle: *mut *mut PtDistortion) -> PtStatus {
    guard(|| {
        let slot = out(out_handle)?;
        let flat = values(matrix, size.saturating_mul(size))?;
        let d = DistortionMatrix::new(rows(flat, size))?;
        *slot = Box::into_raw(Box::new(PtDistortion(d)));
        Ok(())
    })
}

/// # Safety
/// `handle` must come from `pt_distortion_new` or be null.
#[no_mangle]
pub unsafe extern "C" fn pt_distortion_free(handle: *mut PtDistortion) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// H_x(D) in nats.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn pt_rate_distortion(
    source: *const PtDistribution,
    distortion: *const PtDistortion,
    max_distortion: f64,
    tol: f64,
    result: *mut f64,
) -> PtStatus {
    guard(|| {
        let slot = out(result)?;
        *slot = rate_distortion(&borrow(source)?.0, &borrow(distortion)?.0, max_distortion, tol)?.rate_nats;
        Ok(())
    })
}

/// ln of the multinomial n!/Π c!, and the Stirling approximation of it.
///
/// # Safety
/// `counts` must hold `len` values; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn pt_ln_class_size(
    counts: *const u64,
    len: usize,
    exact_log: *mut f64,
    stirling_log: *mut f64,
) -> PtStatus {
    guard(|| {
        let e = out(exact_log)?;
        let s = out(stirling_log)?;
        let t = SequenceType::new(values(counts, len)?.to_vec())?;
        *e = ln_multinomial(t.counts());
        *s = stirling_log_size(&t);
        Ok(())
    })
}

/// ∫ Π p^{a−1} over the simplex.
///
/// # Safety
/// `exponents` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn pt_dirichlet_integral(exponents: *const f64, len: usize, result: *mut f64) -> PtStatus {
    guard(|| {
        let slot = out(result)?;
        *slot = dirichlet_integral(values(exponents, len)?)?;
        Ok(())
    })
}

/// Exact source-coding success probability; `mode` 0 is source-dependent,
/// 1 universal.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn pt_source_coding_psuc(
    source: *const PtDistribution,
    rate: f64,
    n: u64,
    mode: u32,
    result: *mut f64,
) -> PtStatus {
    guard(|| {
        let slot = out(result)?;
        let mode = match mode {
            0 => SourceCodingMode::SourceDependent,
            1 => SourceCodingMode::Universal,
            m => return Err(Error::InvalidParameter(format!("unknown mode {m}")).into()),
        };
        let setup = SourceCodingSetup::new(borrow(source)?.0.clone(), rate, n, mode)?;
        *slot = source_coding_exact_psuc(&setup)?;
        Ok(())
    })
}

/// Step and erfc success predictions for channel coding at (rate, n).
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn pt_channel_prediction(
    channel: *const PtChannel,
    input: *const PtDistribution,
    rate: f64,
    n: u64,
    result: *mut PtChannelPrediction,
) -> PtStatus {
    guard(|| {
        let slot = out(result)?;
        let p = channel_coding_prediction(&borrow(channel)?.0, &borrow(input)?.0, rate, n)?;
        *slot = PtChannelPrediction {
            a: p.a,
            b: p.b,
            p_suc_step: p.p_suc_step,
            p_suc_erfc: p.p_suc_erfc,
        };
        Ok(())
    })
}

/// Random-coding simulation; `decoder` 0 threshold, 1 pairwise,
/// 2 maximum likelihood.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn pt_simulate_channel_coding(
    channel: *const PtChannel,
    input: *const PtDistribution,
    rate: f64,
    n: u64,
    trials: u64,
    decoder: u32,
    seed: u64,
    result: *mut PtTrialReport,
) -> PtStatus {
    guard(|| {
        let slot = out(result)?;
        let decoder = match decoder {
            0 => ChannelDecoder::Threshold,
            1 => ChannelDecoder::Pairwise,
            2 => ChannelDecoder::MaximumLikelihood,
            d => return Err(Error::InvalidParameter(format!("unknown decoder {d}")).into()),
        };
        let setup = ChannelCodingSetup::new(borrow(channel)?.0.clone(), borrow(input)?.0.clone(), rate, n)?;
        let r = simulate_channel_coding(&setup, decoder, trials, RngStream::new(seed, 0), &SimOptions::default())?;
        *slot = PtTrialReport {
            successes: r.successes,
            trials: r.trials,
            p_hat: r.p_hat,
            ci95_halfwidth: r.ci95_halfwidth,
            seed: r.seed,
        };
        Ok(())
    })
}
