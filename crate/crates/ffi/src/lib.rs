//! C ABI over `cardlab`.
//!
//! Every fallible call returns a [`CardlabStatus`]; on failure the message is
//! available from [`cardlab_last_error`] on the same thread. Handles are opaque
//! and owned by the caller once returned; release them with the matching
//! `_free` function. Strings returned as `char *` are released with
//! [`cardlab_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use cardlab::evaluation::{self, EvaluationError, MatrixFormat, Requirement, Status, VerdictMatrix};
use cardlab::fixtures::{self, FixtureKind};
use cardlab::guessing::Dictionary;
use cardlab::proto::{AttackOutcome, AttackReport, ProtocolId};
use cardlab::runner;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CardlabStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    NotFound = 4,
    Rejected = 5,
    EvaluationFailed = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CardlabProtocol {
    Juang = 0,
    Hsiang = 1,
    Kim = 2,
    Xu = 3,
    Li = 4,
}

/// Protocols cross the boundary as `uint32_t` holding a [`CardlabProtocol`]
/// value, so out-of-range input is an error rather than undefined behaviour.
fn protocol_id(raw: u32) -> Option<ProtocolId> {
    ProtocolId::ALL.get(raw as usize).copied()
}

fn bad_protocol(raw: u32) -> CardlabStatus {
    fail(
        CardlabStatus::InvalidArgument,
        format!("protocol {raw} is not a CardlabProtocol value"),
    )
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CardlabVerdict {
    NotEvaluated = 0,
    SatisfiedByDemonstration = 1,
    Violated = 2,
}

impl From<Status> for CardlabVerdict {
    fn from(s: Status) -> Self {
        match s {
            Status::NotEvaluated => CardlabVerdict::NotEvaluated,
            Status::SatisfiedByDemonstration => CardlabVerdict::SatisfiedByDemonstration,
            Status::Violated => CardlabVerdict::Violated,
        }
    }
}

/// Opaque verdict matrix.
pub struct CardlabMatrix(VerdictMatrix);

/// Opaque attack report.
pub struct CardlabAttackReport(AttackReport);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).expect("interior NULs replaced");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn fail(status: CardlabStatus, msg: impl Into<String>) -> CardlabStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> CardlabStatus) -> CardlabStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(CardlabStatus::Panic, "internal panic"),
    }
}

fn requirement(n: u32) -> Option<Requirement> {
    Requirement::ALL.get((n as usize).checked_sub(1)?).copied()
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " "))
        .expect("interior NULs replaced")
        .into_raw()
}

/// Message for the last failed call on this thread, or NULL. Valid until the
/// next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn cardlab_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// # Safety
/// `s` must be NULL or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cardlab_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Builds the verdict matrix for `seed`. `EVALUATION_FAILED` when a scenario
/// fails to produce its evidence; the matrix is not returned in that case.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn cardlab_evaluate(seed: u64, out: *mut *mut CardlabMatrix) -> CardlabStatus {
    guard(|| {
        if out.is_null() {
            return fail(CardlabStatus::NullPointer, "out is NULL");
        }
        match evaluation::run_attack_scenarios(seed) {
            Ok(m) => {
                *out = Box::into_raw(Box::new(CardlabMatrix(m)));
                CardlabStatus::Ok
            }
            Err(EvaluationError::Fixture(e)) => fail(CardlabStatus::Config, e.to_string()),
            Err(e) => fail(CardlabStatus::EvaluationFailed, e.to_string()),
        }
    })
}

/// # Safety
/// `m` must be NULL or a handle from [`cardlab_evaluate`], not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cardlab_matrix_free(m: *mut CardlabMatrix) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Status of one cell; `requirement_number` is 1 through 10.
///
/// # Safety
/// `m` must be a live matrix handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn cardlab_matrix_cell(
    m: *const CardlabMatrix,
    protocol: u32,
    requirement_number: u32,
    out: *mut CardlabVerdict,
    evidence_count: *mut usize,
) -> CardlabStatus {
    guard(|| {
        let (Some(m), false) = (m.as_ref(), out.is_null()) else {
            return fail(CardlabStatus::NullPointer, "matrix or out is NULL");
        };
        let Some(protocol) = protocol_id(protocol) else {
            return bad_protocol(protocol);
        };
        let Some(req) = requirement(requirement_number) else {
            return fail(
                CardlabStatus::InvalidArgument,
                format!("requirement {requirement_number} is not 1..10"),
            );
        };
        let cell = m.0.get(protocol, req);
        *out = cell.status.into();
        if !evidence_count.is_null() {
            *evidence_count = cell.evidence.len();
        }
        CardlabStatus::Ok
    })
}

/// Compares against the expected cells; `EVALUATION_FAILED` names the first
/// mismatch through [`cardlab_last_error`].
///
/// # Safety
/// `m` must be a live matrix handle.
#[no_mangle]
pub unsafe extern "C" fn cardlab_matrix_check_expected(m: *const CardlabMatrix) -> CardlabStatus {
    guard(|| {
        let Some(m) = m.as_ref() else {
            return fail(CardlabStatus::NullPointer, "matrix is NULL");
        };
        match m.0.check_expected() {
            Ok(()) => CardlabStatus::Ok,
            Err(EvaluationError::Fixture(e)) => fail(CardlabStatus::Config, e.to_string()),
            Err(e) => fail(CardlabStatus::EvaluationFailed, e.to_string()),
        }
    })
}

/// Text or line-delimited JSON rendering; free with [`cardlab_string_free`].
///
/// # Safety
/// `m` must be a live matrix handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn cardlab_matrix_render(
    m: *const CardlabMatrix,
    structured: bool,
    out: *mut *mut c_char,
) -> CardlabStatus {
    guard(|| {
        let (Some(m), false) = (m.as_ref(), out.is_null()) else {
            return fail(CardlabStatus::NullPointer, "matrix or out is NULL");
        };
        let format = if structured {
            MatrixFormat::Structured
        } else {
            MatrixFormat::Text
        };
        match evaluation::render_matrix(&m.0, format) {
            Ok(s) => {
                *out = into_c_string(s);
                CardlabStatus::Ok
            }
            Err(e) => fail(CardlabStatus::EvaluationFailed, e.to_string()),
        }
    })
}

/// Runs the honest scenario with the bundled participants. `REJECTED` when
/// either side refuses.
///
/// # Safety
/// `accepted` must be NULL or valid for one write.
#[no_mangle]
pub unsafe extern "C" fn cardlab_honest_run(protocol: u32, seed: u64, accepted: *mut bool) -> CardlabStatus {
    guard(|| {
        let Some(protocol) = protocol_id(protocol) else {
            return bad_protocol(protocol);
        };
        let f = match fixtures::default_fixture(protocol, FixtureKind::Honest) {
            Ok(f) => f,
            Err(e) => return fail(CardlabStatus::Config, e.to_string()),
        };
        let report = match runner::run_honest(protocol, &f.participants, seed, &f.options) {
            Ok(r) => r,
            Err(e) => return fail(CardlabStatus::Config, e.to_string()),
        };
        let ok = report.accepted && report.user_key == report.server_key;
        if !accepted.is_null() {
            *accepted = ok;
        }
        if ok {
            CardlabStatus::Ok
        } else {
            let why = report
                .rejection
                .map_or_else(|| "not accepted".to_string(), |r| r.to_string());
            fail(CardlabStatus::Rejected, format!("{protocol} honest run: {why}"))
        }
    })
}

/// Runs the protocol's attack. `dictionary_path` NULL selects the bundled
/// list; xu ignores it. The report is returned even when the status is
/// `NOT_FOUND` or `REJECTED`.
///
/// # Safety
/// `dictionary_path` must be NULL or a NUL-terminated string; `out` must be
/// valid for one write.
#[no_mangle]
pub unsafe extern "C" fn cardlab_attack_run(
    protocol: u32,
    dictionary_path: *const c_char,
    seed: u64,
    out: *mut *mut CardlabAttackReport,
) -> CardlabStatus {
    guard(|| {
        if out.is_null() {
            return fail(CardlabStatus::NullPointer, "out is NULL");
        }
        *out = ptr::null_mut();
        let Some(protocol) = protocol_id(protocol) else {
            return bad_protocol(protocol);
        };
        let dictionary = if dictionary_path.is_null() {
            Dictionary::builtin_demo()
        } else {
            let path = match CStr::from_ptr(dictionary_path).to_str() {
                Ok(p) => p,
                Err(_) => return fail(CardlabStatus::InvalidArgument, "dictionary path is not UTF-8"),
            };
            match Dictionary::load(path) {
                Ok(d) => d,
                Err(e) => return fail(CardlabStatus::Config, e.to_string()),
            }
        };
        let f = match fixtures::default_fixture(protocol, FixtureKind::Attack) {
            Ok(f) => f,
            Err(e) => return fail(CardlabStatus::Config, e.to_string()),
        };
        let report = match runner::run_attack(protocol, &f.participants, Some(&dictionary), seed, &f.options) {
            Ok(r) => r,
            Err(e) => return fail(CardlabStatus::Config, e.to_string()),
        };
        let status = match &report.outcome {
            AttackOutcome::Guess(g) if !g.is_found() => fail(CardlabStatus::NotFound, format!("{protocol}: {g}")),
            AttackOutcome::Impersonation(r) if !(r.accepted && r.sk.is_some() && r.sk == report.server_key) => {
                fail(CardlabStatus::Rejected, format!("{protocol}: impersonation refused"))
            }
            _ => CardlabStatus::Ok,
        };
        *out = Box::into_raw(Box::new(CardlabAttackReport(report)));
        status
    })
}

/// # Safety
/// `r` must be NULL or a handle from [`cardlab_attack_run`], not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cardlab_attack_free(r: *mut CardlabAttackReport) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// Password recovered or insider accepted. False for NULL.
///
/// # Safety
/// `r` must be NULL or a live report handle.
#[no_mangle]
pub unsafe extern "C" fn cardlab_attack_succeeded(r: *const CardlabAttackReport) -> bool {
    r.as_ref().is_some_and(|r| r.0.succeeded())
}

/// Envelopes the attack put on the network.
///
/// # Safety
/// `r` must be NULL or a live report handle.
#[no_mangle]
pub unsafe extern "C" fn cardlab_attack_online_messages(r: *const CardlabAttackReport) -> usize {
    r.as_ref().map_or(0, |r| r.0.online_messages)
}

/// Login requests sent and candidates tried; both zero for xu.
///
/// # Safety
/// `r` must be a live report handle; the out pointers may be NULL.
#[no_mangle]
pub unsafe extern "C" fn cardlab_attack_guess_counts(
    r: *const CardlabAttackReport,
    login_requests_sent: *mut usize,
    guesses_tried: *mut usize,
) -> CardlabStatus {
    guard(|| {
        let Some(r) = r.as_ref() else {
            return fail(CardlabStatus::NullPointer, "report is NULL");
        };
        let (l, g) = match &r.0.outcome {
            AttackOutcome::Guess(g) => (g.login_requests_sent(), g.guesses_tried()),
            AttackOutcome::Impersonation(_) => (0, 0),
        };
        if !login_requests_sent.is_null() {
            *login_requests_sent = l;
        }
        if !guesses_tried.is_null() {
            *guesses_tried = g;
        }
        CardlabStatus::Ok
    })
}

/// Recovered password, or NULL when none was found. Free with
/// [`cardlab_string_free`].
///
/// # Safety
/// `r` must be NULL or a live report handle.
#[no_mangle]
pub unsafe extern "C" fn cardlab_attack_recovered_password(r: *const CardlabAttackReport) -> *mut c_char {
    match r.as_ref().map(|r| &r.0.outcome) {
        Some(AttackOutcome::Guess(g)) => g.password().map_or(ptr::null_mut(), |p| {
            into_c_string(String::from_utf8_lossy(p).into_owned())
        }),
        _ => ptr::null_mut(),
    }
}

/// Structured transcript of the attack scenario. Free with
/// [`cardlab_string_free`].
///
/// # Safety
/// `r` must be NULL or a live report handle.
#[no_mangle]
pub unsafe extern "C" fn cardlab_attack_transcript(r: *const CardlabAttackReport) -> *mut c_char {
    r.as_ref()
        .map_or(ptr::null_mut(), |r| into_c_string(r.0.transcript.render_structured()))
}
