//! C interface to the crossphase library.
//!
//! Objects are opaque handles created by `cp_*_new`/`cp_*_read` functions and
//! released with the matching `cp_*_free`. Every function returns a
//! [`CpStatus`]; on failure the message is available from
//! [`cp_last_error_message`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use crossphase::crosswords::{run, OrderRule, RetrievalResult, SolverConfig, SolverError};
use crossphase::field_model::{
    read_prg1, write_prg1, GridGeometry, PowerGrid, Prg1Grid, SourceSupport, SpectrumGrid,
};
use crossphase::ring_system::{build_honeycomb, RingSystem};
use crossphase::scenario_lab::nse_aligned;
use crossphase::spectral::CandidateMode;
use num_complex::Complex64;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    /// The search ended without a solution or overflowed its cap.
    SolverFailure = 4,
    GridMismatch = 5,
    OutOfRange = 6,
    Panic = 7,
}

pub struct CpPowerGrid(PowerGrid);
pub struct CpSpectrumGrid(SpectrumGrid);
pub struct CpRingSystem(RingSystem);
pub struct CpRetrieval(RetrievalResult);

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CpCandidateMode {
    Balanced = 0,
    Full = 1,
}

/// Solver settings. Obtain defaults from [`cp_solver_options_default`].
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct CpSolverOptions {
    pub phase_tol_deg: f64,
    pub null_threshold_rel: f64,
    pub frontier_cap: usize,
    pub candidate_mode: CpCandidateMode,
    /// Fixed ring order; 0 selects the fitted order.
    pub order: usize,
    /// Field-domain noise standard deviation; negative when unknown.
    pub noise_sigma: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(CpStatus, String);

impl Failure {
    fn new(status: CpStatus, message: impl Into<String>) -> Self {
        Self(status, message.into())
    }
}

impl From<SolverError> for Failure {
    fn from(e: SolverError) -> Self {
        let status = match e {
            SolverError::InvalidConfig(_) => CpStatus::InvalidArgument,
            _ => CpStatus::SolverFailure,
        };
        Self(status, e.to_string())
    }
}

fn set_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

/// Runs `body`, converting failures and panics into a status and the thread's
/// last error.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> CpStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            CpStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_error(&message);
            status
        }
        Err(panic) => {
            let message = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(&format!("internal error: {message}"));
            CpStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| Failure::new(CpStatus::NullPointer, format!("{name} is null")))
}

unsafe fn out_ptr<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| Failure::new(CpStatus::NullPointer, format!("{name} is null")))
}

unsafe fn path_arg(p: *const c_char) -> Result<String, Failure> {
    if p.is_null() {
        return Err(Failure::new(CpStatus::NullPointer, "path is null"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(str::to_owned)
        .map_err(|_| Failure::new(CpStatus::InvalidArgument, "path is not UTF-8"))
}

fn read_grid(path: &str) -> Result<Prg1Grid, Failure> {
    let file = File::open(path).map_err(|e| Failure::new(CpStatus::Io, format!("{path}: {e}")))?;
    read_prg1(BufReader::new(file)).map_err(|e| Failure::new(CpStatus::Io, format!("{path}: {e}")))
}

fn geometry(n: usize, half_extent: f64) -> Result<GridGeometry, Failure> {
    GridGeometry::new(n, half_extent).map_err(|e| Failure::new(CpStatus::InvalidArgument, e.to_string()))
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn cp_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Power grid of `n × n` samples over `[-half_extent, half_extent]²`,
/// row-major with the `u` index first.
///
/// # Safety
/// `samples` must point to `n * n` readable doubles and `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn cp_power_grid_new(
    n: usize,
    half_extent: f64,
    samples: *const f64,
    out: *mut *mut CpPowerGrid,
) -> CpStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let g = geometry(n, half_extent)?;
        if samples.is_null() {
            return Err(Failure::new(CpStatus::NullPointer, "samples is null"));
        }
        let values = std::slice::from_raw_parts(samples, n * n).to_vec();
        let grid = PowerGrid::new(g, values).map_err(|e| Failure::new(CpStatus::InvalidArgument, e.to_string()))?;
        *out = Box::into_raw(Box::new(CpPowerGrid(grid)));
        Ok(())
    })
}

/// Reads a real PRG1 file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cp_power_grid_read(path: *const c_char, out: *mut *mut CpPowerGrid) -> CpStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let path = path_arg(path)?;
        match read_grid(&path)? {
            Prg1Grid::Real(g) => {
                *out = Box::into_raw(Box::new(CpPowerGrid(g)));
                Ok(())
            }
            Prg1Grid::Complex(_) => Err(Failure::new(CpStatus::InvalidArgument, format!("{path}: complex grid"))),
        }
    })
}

/// Samples per axis.
///
/// # Safety
/// `grid` must be a live handle and `n` writable.
#[no_mangle]
pub unsafe extern "C" fn cp_power_grid_size(grid: *const CpPowerGrid, n: *mut usize) -> CpStatus {
    guard(|| {
        *out_ptr(n, "n")? = deref(grid, "grid")?.0.geometry().n();
        Ok(())
    })
}

/// # Safety
/// `grid` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cp_power_grid_free(grid: *mut CpPowerGrid) {
    if !grid.is_null() {
        drop(Box::from_raw(grid));
    }
}

/// Complex grid from interleaved `(re, im)` pairs, row-major with the `u`
/// index first.
///
/// # Safety
/// `re_im` must point to `2 * n * n` readable doubles and `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn cp_spectrum_grid_new(
    n: usize,
    half_extent: f64,
    re_im: *const f64,
    out: *mut *mut CpSpectrumGrid,
) -> CpStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let g = geometry(n, half_extent)?;
        if re_im.is_null() {
            return Err(Failure::new(CpStatus::NullPointer, "re_im is null"));
        }
        let raw = std::slice::from_raw_parts(re_im, 2 * n * n);
        let values = raw.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect();
        let grid = SpectrumGrid::new(g, values).map_err(|e| Failure::new(CpStatus::InvalidArgument, e.to_string()))?;
        *out = Box::into_raw(Box::new(CpSpectrumGrid(grid)));
        Ok(())
    })
}

/// Reads a complex PRG1 file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cp_spectrum_grid_read(path: *const c_char, out: *mut *mut CpSpectrumGrid) -> CpStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let path = path_arg(path)?;
        match read_grid(&path)? {
            Prg1Grid::Complex(g) => {
                *out = Box::into_raw(Box::new(CpSpectrumGrid(g)));
                Ok(())
            }
            Prg1Grid::Real(_) => Err(Failure::new(CpStatus::InvalidArgument, format!("{path}: real grid"))),
        }
    })
}

/// Writes a complex PRG1 file.
///
/// # Safety
/// `grid` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn cp_spectrum_grid_write(grid: *const CpSpectrumGrid, path: *const c_char) -> CpStatus {
    guard(|| {
        let grid = deref(grid, "grid")?;
        let path = path_arg(path)?;
        let io = |e: std::io::Error| Failure::new(CpStatus::Io, format!("{path}: {e}"));
        let mut w = BufWriter::new(File::create(&path).map_err(io)?);
        write_prg1(&Prg1Grid::Complex(grid.0.clone()), &mut w).map_err(io)?;
        w.flush().map_err(io)
    })
}

/// Samples per axis.
///
/// # Safety
/// `grid` must be a live handle and `n` writable.
#[no_mangle]
pub unsafe extern "C" fn cp_spectrum_grid_size(grid: *const CpSpectrumGrid, n: *mut usize) -> CpStatus {
    guard(|| {
        *out_ptr(n, "n")? = deref(grid, "grid")?.0.geometry().n();
        Ok(())
    })
}

/// Copies the samples as interleaved `(re, im)` pairs.
///
/// # Safety
/// `grid` must be a live handle and `re_im` must point to `capacity`
/// writable doubles.
#[no_mangle]
pub unsafe extern "C" fn cp_spectrum_grid_samples(
    grid: *const CpSpectrumGrid,
    re_im: *mut f64,
    capacity: usize,
) -> CpStatus {
    guard(|| {
        let grid = &deref(grid, "grid")?.0;
        let need = 2 * grid.samples().len();
        if re_im.is_null() {
            return Err(Failure::new(CpStatus::NullPointer, "re_im is null"));
        }
        if capacity < need {
            return Err(Failure::new(CpStatus::OutOfRange, format!("buffer holds {capacity} doubles, {need} needed")));
        }
        let dst = std::slice::from_raw_parts_mut(re_im, need);
        for (d, s) in dst.chunks_exact_mut(2).zip(grid.samples()) {
            d[0] = s.re;
            d[1] = s.im;
        }
        Ok(())
    })
}

/// Square amplitude of a spectrum.
///
/// # Safety
/// `grid` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cp_spectrum_grid_power(grid: *const CpSpectrumGrid, out: *mut *mut CpPowerGrid) -> CpStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = Box::into_raw(Box::new(CpPowerGrid(deref(grid, "grid")?.0.power())));
        Ok(())
    })
}

/// NSE of `recovered` against `nominal` over the visible disk after the best
/// constant-phase alignment.
///
/// # Safety
/// Both grids must be live handles and `nse` writable.
#[no_mangle]
pub unsafe extern "C" fn cp_spectrum_grid_nse(
    nominal: *const CpSpectrumGrid,
    recovered: *const CpSpectrumGrid,
    nse: *mut f64,
) -> CpStatus {
    guard(|| {
        let out = out_ptr(nse, "nse")?;
        let (a, b) = (deref(nominal, "nominal")?, deref(recovered, "recovered")?);
        *out = nse_aligned(&a.0, &b.0).map_err(|e| Failure::new(CpStatus::GridMismatch, e.to_string()))?;
        Ok(())
    })
}

/// # Safety
/// `grid` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cp_spectrum_grid_free(grid: *mut CpSpectrumGrid) {
    if !grid.is_null() {
        drop(Box::from_raw(grid));
    }
}

/// Honeycomb of rings of radius `kbar` covering the disk of radius
/// `cover_radius`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cp_ring_system_new(kbar: f64, cover_radius: f64, out: *mut *mut CpRingSystem) -> CpStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let system = build_honeycomb(kbar, cover_radius, false)
            .map_err(|e| Failure::new(CpStatus::InvalidArgument, e.to_string()))?;
        *out = Box::into_raw(Box::new(CpRingSystem(system)));
        Ok(())
    })
}

/// Ring and intersection point counts.
///
/// # Safety
/// `system` must be a live handle; `rings` and `points` writable.
#[no_mangle]
pub unsafe extern "C" fn cp_ring_system_counts(
    system: *const CpRingSystem,
    rings: *mut usize,
    points: *mut usize,
) -> CpStatus {
    guard(|| {
        let s = &deref(system, "system")?.0;
        *out_ptr(rings, "rings")? = s.rings().len();
        *out_ptr(points, "points")? = s.intersections().len();
        Ok(())
    })
}

/// # Safety
/// `system` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cp_ring_system_free(system: *mut CpRingSystem) {
    if !system.is_null() {
        drop(Box::from_raw(system));
    }
}

#[no_mangle]
pub extern "C" fn cp_solver_options_default() -> CpSolverOptions {
    let d = SolverConfig::default();
    CpSolverOptions {
        phase_tol_deg: d.phase_tol_deg,
        null_threshold_rel: d.null_threshold_rel,
        frontier_cap: d.frontier_cap,
        candidate_mode: CpCandidateMode::Balanced,
        order: match d.order {
            OrderRule::Fixed(h) => h,
            OrderRule::Fit { .. } => 0,
        },
        noise_sigma: -1.0,
    }
}

fn solver_config(o: &CpSolverOptions) -> SolverConfig {
    SolverConfig {
        phase_tol_deg: o.phase_tol_deg,
        null_threshold_rel: o.null_threshold_rel,
        frontier_cap: o.frontier_cap,
        candidate_mode: match o.candidate_mode {
            CpCandidateMode::Balanced => CandidateMode::Balanced,
            CpCandidateMode::Full => CandidateMode::Full,
        },
        order: if o.order == 0 { OrderRule::Fit { tol: 1e-3, max: 12 } } else { OrderRule::Fixed(o.order) },
        noise_sigma: (o.noise_sigma >= 0.0).then_some(o.noise_sigma),
        ..SolverConfig::default()
    }
}

/// Retrieves the spectrum of a source supported in the disk of radius
/// `support_radius` from its square amplitude.
///
/// # Safety
/// `system` and `power` must be live handles, `options` null (defaults) or
/// readable, and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cp_retrieve(
    system: *const CpRingSystem,
    power: *const CpPowerGrid,
    support_radius: f64,
    options: *const CpSolverOptions,
    out: *mut *mut CpRetrieval,
) -> CpStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let system = deref(system, "system")?;
        let power = deref(power, "power")?;
        let options = options.as_ref().copied().unwrap_or_else(|| cp_solver_options_default());
        let support = SourceSupport::new(support_radius)
            .map_err(|e| Failure::new(CpStatus::InvalidArgument, e.to_string()))?;
        let result = run(&system.0, &power.0, &support, &solver_config(&options))?;
        *out = Box::into_raw(Box::new(CpRetrieval(result)));
        Ok(())
    })
}

/// Number of solutions and whether more than two survived.
///
/// # Safety
/// `retrieval` must be a live handle; `count` and `ambiguous` writable.
#[no_mangle]
pub unsafe extern "C" fn cp_retrieval_solutions(
    retrieval: *const CpRetrieval,
    count: *mut usize,
    ambiguous: *mut bool,
) -> CpStatus {
    guard(|| {
        let r = &deref(retrieval, "retrieval")?.0;
        *out_ptr(count, "count")? = r.solutions.len();
        *out_ptr(ambiguous, "ambiguous")? = r.diagnostics.ambiguous;
        Ok(())
    })
}

/// Copy of solution `index` as a new grid handle.
///
/// # Safety
/// `retrieval` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cp_retrieval_solution(
    retrieval: *const CpRetrieval,
    index: usize,
    out: *mut *mut CpSpectrumGrid,
) -> CpStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let r = &deref(retrieval, "retrieval")?.0;
        let s = r.solutions.get(index).ok_or_else(|| {
            Failure::new(CpStatus::OutOfRange, format!("solution {index} of {}", r.solutions.len()))
        })?;
        *out = Box::into_raw(Box::new(CpSpectrumGrid(s.grid.clone())));
        Ok(())
    })
}

/// Frontier size after each step. Writes at most `capacity` values and
/// stores the full length in `len`.
///
/// # Safety
/// `retrieval` must be a live handle, `trace` null or pointing to `capacity`
/// writable values, and `len` writable.
#[no_mangle]
pub unsafe extern "C" fn cp_retrieval_frontier_trace(
    retrieval: *const CpRetrieval,
    trace: *mut usize,
    capacity: usize,
    len: *mut usize,
) -> CpStatus {
    guard(|| {
        let t = deref(retrieval, "retrieval")?.0.diagnostics.frontier_trace();
        *out_ptr(len, "len")? = t.len();
        if !trace.is_null() {
            let n = capacity.min(t.len());
            std::slice::from_raw_parts_mut(trace, n).copy_from_slice(&t[..n]);
        }
        Ok(())
    })
}

/// # Safety
/// `retrieval` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cp_retrieval_free(retrieval: *mut CpRetrieval) {
    if !retrieval.is_null() {
        drop(Box::from_raw(retrieval));
    }
}
