//! C ABI for the newsvendor library.
//!
//! Every function returns an [`NvStatus`]; results go through out-pointers.
//! On failure the message is kept per thread and can be copied out with
//! [`nv_last_error_message`]. Instances and trajectories are opaque handles
//! that must be released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use newsvendor::demand::{demand_variation, prediction_error, CostRates, DemandFamily, MeanBounds, QuantitySpace};
use newsvendor::instances::{gen_lower_bound_cycles, Instance};
use newsvendor::policies::PolicySpec;
use newsvendor::rng::{stream, Stream};
use newsvendor::sim::{gap, run_episode, total_regret, Trajectory};
use newsvendor::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NvStatus {
    Ok = 0,
    NullPointer = 1,
    Domain = 2,
    Incompatible = 3,
    UndefinedGap = 4,
    Parse = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NvFamilyKind {
    /// `param` is the standard deviation.
    Normal = 0,
    Bernoulli = 1,
    /// `param` is the half-width.
    Uniform = 2,
    PointMass = 3,
    /// `param` is the truncation multiplier `k`.
    TruncatedPoisson = 4,
}

/// A demand family over the mean range `[min_mean, max_mean]`.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct NvFamily {
    pub kind: NvFamilyKind,
    pub param: f64,
    pub min_mean: f64,
    pub max_mean: f64,
}

/// Opaque problem instance.
pub struct NvInstance(Instance);

/// Opaque result of one episode.
pub struct NvTrajectory(Trajectory);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(err: &Error) -> NvStatus {
    match err {
        Error::Domain(_) => NvStatus::Domain,
        Error::Incompatible(_) => NvStatus::Incompatible,
        Error::UndefinedGap => NvStatus::UndefinedGap,
        Error::Parse { .. } | Error::Config { .. } | Error::Json(_) => NvStatus::Parse,
        _ => NvStatus::Domain,
    }
}

/// Run `f`, translating errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), (NvStatus, String)>) -> NvStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => NvStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            NvStatus::Panic
        }
    }
}

trait IntoFfi<T> {
    fn ffi(self) -> Result<T, (NvStatus, String)>;
}

impl<T> IntoFfi<T> for Result<T, Error> {
    fn ffi(self) -> Result<T, (NvStatus, String)> {
        self.map_err(|e| (status_of(&e), e.to_string()))
    }
}

fn null(name: &str) -> (NvStatus, String) {
    (NvStatus::NullPointer, format!("`{name}` is null"))
}

unsafe fn slice<'a>(p: *const f64, len: usize, name: &str) -> Result<&'a [f64], (NvStatus, String)> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(name));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn write<T>(out: *mut T, value: T, name: &str) -> Result<(), (NvStatus, String)> {
    if out.is_null() {
        return Err(null(name));
    }
    out.write(value);
    Ok(())
}

fn family(desc: &NvFamily) -> Result<DemandFamily, Error> {
    let bounds = MeanBounds::new(desc.min_mean, desc.max_mean)?;
    match desc.kind {
        NvFamilyKind::Normal => DemandFamily::normal(desc.param, bounds),
        NvFamilyKind::Bernoulli => DemandFamily::bernoulli(bounds),
        NvFamilyKind::Uniform => DemandFamily::uniform(desc.param, bounds),
        NvFamilyKind::PointMass => DemandFamily::point_mass(bounds),
        NvFamilyKind::TruncatedPoisson => DemandFamily::truncated_poisson(desc.param, bounds),
    }
}

/// Expected cost of ordering `q` when demand has mean `mu`.
///
/// # Safety
/// `fam` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn nv_expected_cost(
    fam: *const NvFamily,
    mu: f64,
    b: f64,
    h: f64,
    q: f64,
    out: *mut f64,
) -> NvStatus {
    guard(|| {
        let fam = fam.as_ref().ok_or_else(|| null("fam"))?;
        let rates = CostRates::new(b, h).ffi()?;
        let c = family(fam).and_then(|f| f.expected_cost(mu, rates, q)).ffi()?;
        write(out, c, "out")
    })
}

/// Cost-minimizing nonnegative order quantity at mean `mu`.
///
/// # Safety
/// `fam` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn nv_optimal_quantity(fam: *const NvFamily, mu: f64, b: f64, h: f64, out: *mut f64) -> NvStatus {
    guard(|| {
        let fam = fam.as_ref().ok_or_else(|| null("fam"))?;
        let rates = CostRates::new(b, h).ffi()?;
        let q = family(fam).and_then(|f| f.optimal_quantity(mu, rates, &QuantitySpace::NonnegativeReals)).ffi()?;
        write(out, q, "out")
    })
}

/// Maximum over partitions of summed `|increment|^theta`.
///
/// # Safety
/// `seq` must point to `len` doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn nv_demand_variation(seq: *const f64, len: usize, theta: f64, out: *mut f64) -> NvStatus {
    guard(|| {
        let s = slice(seq, len, "seq")?;
        let v = demand_variation(s, theta).ffi()?;
        write(out, v, "out")
    })
}

/// Sum of absolute prediction errors.
///
/// # Safety
/// `preds` and `means` must point to `len` doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn nv_prediction_error(
    preds: *const f64,
    means: *const f64,
    len: usize,
    out: *mut f64,
) -> NvStatus {
    guard(|| {
        let p = slice(preds, len, "preds")?;
        let m = slice(means, len, "means")?;
        let e = prediction_error(p, m).ffi()?;
        write(out, e, "out")
    })
}

/// `(perp - min(pure, nopred)) / |pure - nopred|`; `NV_STATUS_UNDEFINED_GAP` on equal baselines.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn nv_gap(perp: f64, pure: f64, nopred: f64, out: *mut f64) -> NvStatus {
    guard(|| {
        let g = gap(perp, pure, nopred).ffi()?;
        write(out, g, "out")
    })
}

/// Bernoulli cycle instance for exponents `(v, a)`.
///
/// # Safety
/// `out` must be valid; the handle is released with [`nv_instance_free`].
#[no_mangle]
pub unsafe extern "C" fn nv_instance_lower_bound_new(
    v: f64,
    a: f64,
    horizon: usize,
    seed: u64,
    out: *mut *mut NvInstance,
) -> NvStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let inst = gen_lower_bound_cycles(v, a, horizon, &mut stream(seed, Stream::Instance)).ffi()?;
        out.write(Box::into_raw(Box::new(NvInstance(inst))));
        Ok(())
    })
}

/// # Safety
/// `inst` must come from an `nv_instance_*_new` call and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn nv_instance_free(inst: *mut NvInstance) {
    if !inst.is_null() {
        drop(Box::from_raw(inst));
    }
}

/// # Safety
/// `inst` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn nv_instance_horizon(inst: *const NvInstance, out: *mut usize) -> NvStatus {
    guard(|| {
        let inst = inst.as_ref().ok_or_else(|| null("inst"))?;
        write(out, inst.0.horizon(), "out")
    })
}

/// Run the policy described by `policy_toml` (e.g. `kind = "fixed-window"` and `v = 0.5`).
///
/// # Safety
/// `inst` must be valid, `policy_toml` a NUL-terminated UTF-8 string and
/// `out` valid; the handle is released with [`nv_trajectory_free`].
#[no_mangle]
pub unsafe extern "C" fn nv_run_episode(
    inst: *const NvInstance,
    policy_toml: *const c_char,
    seed: u64,
    out: *mut *mut NvTrajectory,
) -> NvStatus {
    guard(|| {
        let inst = inst.as_ref().ok_or_else(|| null("inst"))?;
        if policy_toml.is_null() {
            return Err(null("policy_toml"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let text =
            CStr::from_ptr(policy_toml).to_str().map_err(|e| (NvStatus::Parse, format!("policy is not UTF-8: {e}")))?;
        let spec: PolicySpec = toml::from_str(text).map_err(|e| (NvStatus::Parse, e.message().to_string()))?;
        let traj = run_episode(&inst.0, &spec, seed).ffi()?;
        out.write(Box::into_raw(Box::new(NvTrajectory(traj))));
        Ok(())
    })
}

/// # Safety
/// `traj` must come from [`nv_run_episode`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn nv_trajectory_free(traj: *mut NvTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}

/// # Safety
/// `traj` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn nv_trajectory_len(traj: *const NvTrajectory, out: *mut usize) -> NvStatus {
    guard(|| {
        let traj = traj.as_ref().ok_or_else(|| null("traj"))?;
        write(out, traj.0.len(), "out")
    })
}

/// # Safety
/// `traj` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn nv_trajectory_total_regret(traj: *const NvTrajectory, out: *mut f64) -> NvStatus {
    guard(|| {
        let traj = traj.as_ref().ok_or_else(|| null("traj"))?;
        write(out, total_regret(&traj.0), "out")
    })
}

/// Copy the ordered quantities into `buf`, which must hold the trajectory length.
///
/// # Safety
/// `traj` must be valid and `buf` must point to `cap` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn nv_trajectory_copy_quantities(
    traj: *const NvTrajectory,
    buf: *mut f64,
    cap: usize,
) -> NvStatus {
    guard(|| {
        let traj = traj.as_ref().ok_or_else(|| null("traj"))?;
        let n = traj.0.len();
        if cap < n {
            return Err((NvStatus::BufferTooSmall, format!("buffer holds {cap}, need {n}")));
        }
        if n > 0 && buf.is_null() {
            return Err(null("buf"));
        }
        for (i, r) in traj.0.records.iter().enumerate() {
            buf.add(i).write(r.quantity);
        }
        Ok(())
    })
}

/// Copy the calling thread's last error message, NUL-terminated and
/// truncated to `cap` bytes. Returns the full message length without the NUL.
///
/// # Safety
/// `buf` must point to `cap` writable bytes, or be null with `cap == 0`.
#[no_mangle]
pub unsafe extern "C" fn nv_last_error_message(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && cap > 0 {
            let n = msg.len().min(cap - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            buf.add(n).write(0);
        }
        msg.len()
    })
}
