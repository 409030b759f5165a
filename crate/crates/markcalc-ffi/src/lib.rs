//! C ABI for the workbench.
//!
//! Terms are opaque handles created by the parse functions and released
//! with the matching free functions. Fallible calls either return a null
//! pointer or a negative status; the message behind the most recent
//! failure on the current thread is available through
//! [`mc_last_error_message`]. Strings returned by this library are NUL
//! terminated, UTF-8, and must be released with [`mc_string_free`].
//!
//! The generated header lives in `include/markcalc.h`.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::ptr;

use markcalc::bisim::{equivalent_it, equivalent_ot, OtVariant, Verdict};
use markcalc::encode::gamma;
use markcalc::mlts::{build, export_dot, export_json, extract_ctmc};
use markcalc::parser::{parse_it, parse_ot, print_it, print_ot};
use markcalc::semantics::{classify_ot, it_stepper, ot_stepper, RateComposer};
use markcalc::terms::{
    check_well_formed_it, check_well_formed_ot, classify_it, Calculus, ItTerm, OtTerm,
};

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let stored = CString::new(message)
        .unwrap_or_else(|_| CString::new("error message contained NUL").unwrap());
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(stored));
}

fn clear_error() {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
}

/// Message of the most recent failure on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread; do not free
/// it.
#[no_mangle]
pub extern "C" fn mc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow()
            .as_ref()
            .map_or(ptr::null(), |s| s.as_ptr())
    })
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must have been returned by a `markcalc_ffi` function and not freed
/// before. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn mc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

fn export_string(s: String) -> *mut c_char {
    match CString::new(s) {
        Ok(c) => c.into_raw(),
        Err(_) => {
            set_error("output contained an interior NUL".into());
            ptr::null_mut()
        }
    }
}

unsafe fn input_str<'a>(text: *const c_char) -> Result<&'a str, ()> {
    if text.is_null() {
        set_error("null input pointer".into());
        return Err(());
    }
    CStr::from_ptr(text).to_str().map_err(|_| {
        set_error("input is not valid UTF-8".into());
    })
}

/// Opaque integrated-time term handle.
pub struct McItTerm(ItTerm);

/// Opaque orthogonal-time term handle.
pub struct McOtTerm(OtTerm);

/// Status and verdict codes. Negative values are failures; inspect
/// [`mc_last_error_message`].
#[repr(C)]
#[derive(PartialEq, Eq)]
pub enum McStatus {
    McOk = 0,
    McInequivalent = 2,
    McInconclusive = 3,
    McClassViolation = 4,
    McError = -1,
}

/// Rate composer selector for synchronizing integrated-time actions.
#[repr(C)]
#[derive(Clone, Copy)]
pub enum McOtimes {
    McOtimesProduct = 0,
    McOtimesMin = 1,
    McOtimesSum = 2,
}

impl From<McOtimes> for RateComposer {
    fn from(o: McOtimes) -> RateComposer {
        match o {
            McOtimes::McOtimesProduct => RateComposer::Product,
            McOtimes::McOtimesMin => RateComposer::Min,
            McOtimes::McOtimesSum => RateComposer::Sum,
        }
    }
}

/// Urgency variant selector for orthogonal-time equivalence and the
/// translations.
#[repr(C)]
#[derive(Clone, Copy)]
pub enum McVariant {
    McVariantLazy = 0,
    McVariantEager = 1,
    McVariantMaxProgress = 2,
}

impl From<McVariant> for OtVariant {
    fn from(v: McVariant) -> OtVariant {
        match v {
            McVariant::McVariantLazy => OtVariant::Lazy,
            McVariant::McVariantEager => OtVariant::Eager,
            McVariant::McVariantMaxProgress => OtVariant::MaxProgress,
        }
    }
}

/// Parses an integrated-time term. Returns null on syntax errors.
///
/// # Safety
/// `text` must be a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn mc_it_parse(text: *const c_char) -> *mut McItTerm {
    let Ok(src) = input_str(text) else {
        return ptr::null_mut();
    };
    match parse_it(src) {
        Ok(term) => {
            clear_error();
            Box::into_raw(Box::new(McItTerm(term)))
        }
        Err(e) => {
            set_error(e.to_string());
            ptr::null_mut()
        }
    }
}

/// Parses an orthogonal-time term. Returns null on syntax errors.
///
/// # Safety
/// `text` must be a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn mc_ot_parse(text: *const c_char) -> *mut McOtTerm {
    let Ok(src) = input_str(text) else {
        return ptr::null_mut();
    };
    match parse_ot(src) {
        Ok(term) => {
            clear_error();
            Box::into_raw(Box::new(McOtTerm(term)))
        }
        Err(e) => {
            set_error(e.to_string());
            ptr::null_mut()
        }
    }
}

/// # Safety
/// `term` must come from `mc_it_parse`/`mc_encode` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn mc_it_free(term: *mut McItTerm) {
    if !term.is_null() {
        drop(Box::from_raw(term));
    }
}

/// # Safety
/// `term` must come from `mc_ot_parse`/`mc_encode` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn mc_ot_free(term: *mut McOtTerm) {
    if !term.is_null() {
        drop(Box::from_raw(term));
    }
}

unsafe fn it_ref<'a>(term: *const McItTerm) -> Result<&'a ItTerm, ()> {
    term.as_ref().map(|t| &t.0).ok_or_else(|| {
        set_error("null term handle".into());
    })
}

unsafe fn ot_ref<'a>(term: *const McOtTerm) -> Result<&'a OtTerm, ()> {
    term.as_ref().map(|t| &t.0).ok_or_else(|| {
        set_error("null term handle".into());
    })
}

/// Canonical text of a term; free with `mc_string_free`.
///
/// # Safety
/// `term` must be a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn mc_it_print(term: *const McItTerm) -> *mut c_char {
    match it_ref(term) {
        Ok(t) => export_string(print_it(t)),
        Err(()) => ptr::null_mut(),
    }
}

/// # Safety
/// `term` must be a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn mc_ot_print(term: *const McOtTerm) -> *mut c_char {
    match ot_ref(term) {
        Ok(t) => export_string(print_ot(t)),
        Err(()) => ptr::null_mut(),
    }
}

/// 1 when the term is closed and guarded, 0 when not (the diagnostic lands
/// in the error message), negative on failure.
///
/// # Safety
/// `term` must be a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn mc_it_well_formed(term: *const McItTerm) -> c_int {
    let Ok(t) = it_ref(term) else { return -1 };
    let report = check_well_formed_it(t);
    if report.is_ok() {
        1
    } else {
        set_error(report.to_string());
        0
    }
}

/// # Safety
/// `term` must be a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn mc_ot_well_formed(term: *const McOtTerm) -> c_int {
    let Ok(t) = ot_ref(term) else { return -1 };
    let report = check_well_formed_ot(t);
    if report.is_ok() {
        1
    } else {
        set_error(report.to_string());
        0
    }
}

/// Translates an integrated-time term; null with a class-violation message
/// when the term is outside the variant's domain.
///
/// # Safety
/// `term` must be a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn mc_encode(
    term: *const McItTerm,
    variant: McVariant,
) -> *mut McOtTerm {
    let Ok(t) = it_ref(term) else {
        return ptr::null_mut();
    };
    match gamma(variant.into(), t) {
        Ok(q) => {
            clear_error();
            Box::into_raw(Box::new(McOtTerm(q)))
        }
        Err(e) => {
            set_error(e.to_string());
            ptr::null_mut()
        }
    }
}

fn verdict_status(v: Verdict) -> McStatus {
    match v {
        Verdict::Equivalent => McStatus::McOk,
        Verdict::Inequivalent(d) => {
            set_error(d.to_string());
            McStatus::McInequivalent
        }
        Verdict::Inconclusive => {
            set_error("state bound reached before both terms were explored".into());
            McStatus::McInconclusive
        }
    }
}

/// Integrated-time Markovian bisimilarity of two terms.
///
/// # Safety
/// Both handles must be live handles from this library.
#[no_mangle]
pub unsafe extern "C" fn mc_equivalent_it(
    left: *const McItTerm,
    right: *const McItTerm,
    otimes: McOtimes,
    max_states: usize,
) -> McStatus {
    let (Ok(l), Ok(r)) = (it_ref(left), it_ref(right)) else {
        return McStatus::McError;
    };
    match equivalent_it(l, r, otimes.into(), max_states) {
        Ok(v) => verdict_status(v),
        Err(e) => {
            set_error(e.to_string());
            McStatus::McError
        }
    }
}

/// Orthogonal-time Markovian bisimilarity under the chosen variant.
///
/// # Safety
/// Both handles must be live handles from this library.
#[no_mangle]
pub unsafe extern "C" fn mc_equivalent_ot(
    left: *const McOtTerm,
    right: *const McOtTerm,
    variant: McVariant,
    max_states: usize,
) -> McStatus {
    let (Ok(l), Ok(r)) = (ot_ref(left), ot_ref(right)) else {
        return McStatus::McError;
    };
    match equivalent_ot(l, r, variant.into(), max_states) {
        Ok(v) => verdict_status(v),
        Err(e) => {
            set_error(e.to_string());
            McStatus::McError
        }
    }
}

/// One theorem instance: 1 when the integrated-time verdict on the pair
/// and the orthogonal-time verdict on its translations agree, 0 when they
/// do not, 3 when either side was inconclusive, 4 on a class violation,
/// negative on failure.
///
/// # Safety
/// Both handles must be live handles from this library.
#[no_mangle]
pub unsafe extern "C" fn mc_check_preservation(
    left: *const McItTerm,
    right: *const McItTerm,
    variant: McVariant,
    otimes: McOtimes,
    max_states: usize,
) -> c_int {
    let (Ok(p1), Ok(p2)) = (it_ref(left), it_ref(right)) else {
        return -1;
    };
    let v: OtVariant = variant.into();
    let (q1, q2) = match (gamma(v, p1), gamma(v, p2)) {
        (Ok(q1), Ok(q2)) => (q1, q2),
        (Err(e), _) | (_, Err(e)) => {
            set_error(e.to_string());
            return McStatus::McClassViolation as c_int;
        }
    };
    let it_verdict = match equivalent_it(p1, p2, otimes.into(), max_states) {
        Ok(v) => v,
        Err(e) => {
            set_error(e.to_string());
            return -1;
        }
    };
    let ot_verdict = match equivalent_ot(&q1, &q2, v, max_states) {
        Ok(v) => v,
        Err(e) => {
            set_error(e.to_string());
            return -1;
        }
    };
    if matches!(it_verdict, Verdict::Inconclusive) || matches!(ot_verdict, Verdict::Inconclusive) {
        set_error("state bound reached; theorem instance undecided".into());
        return McStatus::McInconclusive as c_int;
    }
    (it_verdict.is_equivalent() == ot_verdict.is_equivalent()) as c_int
}

/// The labeled multitransition system of an integrated-time term, as JSON
/// (`as_dot` nonzero selects DOT). Null when the state bound is hit.
///
/// # Safety
/// `term` must be a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn mc_it_lts(
    term: *const McItTerm,
    otimes: McOtimes,
    max_states: usize,
    as_dot: c_int,
) -> *mut c_char {
    let Ok(t) = it_ref(term) else {
        return ptr::null_mut();
    };
    match build(
        t.clone(),
        Calculus::It,
        it_stepper(otimes.into()),
        max_states,
    ) {
        Ok(m) => export_string(if as_dot != 0 {
            export_dot(&m)
        } else {
            export_json(&m)
        }),
        Err(e) => {
            set_error(e.to_string());
            ptr::null_mut()
        }
    }
}

/// # Safety
/// `term` must be a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn mc_ot_lts(
    term: *const McOtTerm,
    max_states: usize,
    as_dot: c_int,
) -> *mut c_char {
    let Ok(t) = ot_ref(term) else {
        return ptr::null_mut();
    };
    match build(t.clone(), Calculus::Ot, ot_stepper(), max_states) {
        Ok(m) => export_string(if as_dot != 0 {
            export_dot(&m)
        } else {
            export_json(&m)
        }),
        Err(e) => {
            set_error(e.to_string());
            ptr::null_mut()
        }
    }
}

/// Rate matrix of the chain underlying an integrated-time term, as a JSON
/// array of arrays of exact rate strings.
///
/// # Safety
/// `term` must be a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn mc_it_ctmc(
    term: *const McItTerm,
    otimes: McOtimes,
    max_states: usize,
) -> *mut c_char {
    let Ok(t) = it_ref(term) else {
        return ptr::null_mut();
    };
    let system = match build(
        t.clone(),
        Calculus::It,
        it_stepper(otimes.into()),
        max_states,
    ) {
        Ok(m) => m,
        Err(e) => {
            set_error(e.to_string());
            return ptr::null_mut();
        }
    };
    match extract_ctmc(&system) {
        Ok(matrix) => {
            let rows: Vec<Vec<String>> = matrix
                .iter()
                .map(|row| row.iter().map(|r| r.to_string()).collect())
                .collect();
            export_string(serde_json_string(&rows))
        }
        Err(e) => {
            set_error(e.to_string());
            ptr::null_mut()
        }
    }
}

fn serde_json_string(rows: &[Vec<String>]) -> String {
    let mut out = String::from("[");
    for (i, row) in rows.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push('[');
        for (j, cell) in row.iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            out.push('"');
            out.push_str(cell);
            out.push('"');
        }
        out.push(']');
    }
    out.push(']');
    out
}

/// Class flags of a term as JSON. For orthogonal-time terms the two
/// nondeterminism flags require exploring the state space up to
/// `max_states`.
///
/// # Safety
/// `term` must be a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn mc_it_classify(term: *const McItTerm) -> *mut c_char {
    let Ok(t) = it_ref(term) else {
        return ptr::null_mut();
    };
    match serde_json::to_string(&classify_it(t)) {
        Ok(s) => export_string(s),
        Err(e) => {
            set_error(e.to_string());
            ptr::null_mut()
        }
    }
}

/// # Safety
/// `term` must be a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn mc_ot_classify(
    term: *const McOtTerm,
    max_states: usize,
) -> *mut c_char {
    let Ok(t) = ot_ref(term) else {
        return ptr::null_mut();
    };
    match classify_ot(t, max_states) {
        Ok(class) => match serde_json::to_string(&class) {
            Ok(s) => export_string(s),
            Err(e) => {
                set_error(e.to_string());
                ptr::null_mut()
            }
        },
        Err(e) => {
            set_error(e.to_string());
            ptr::null_mut()
        }
    }
}

