//! C ABI over `clarify_rank`.
//!
//! Every fallible function returns a [`CrStatus`]; on failure the message is
//! available from [`cr_last_error_message`] on the same thread. Models and
//! embedding tables are opaque handles released with their `_free` function.
//! Panics never cross the boundary; they surface as `CR_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::slice;

use clarify_rank::ingest::{ClickRecord, Impression};
use clarify_rank::linalg::Matrix;
use clarify_rank::metrics::{mrr, ndcg};
use clarify_rank::model_file::{ModelFile, VectorizerSpec};
use clarify_rank::nn::{Inputs, MlpModel};
use clarify_rank::ranker::lambda_gradients;
use clarify_rank::stats::paired_ttest;
use clarify_rank::vectorize::{load_embeddings, EmbeddingMatrix};
use clarify_rank::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Format = 4,
    Shape = 5,
    Panic = 6,
}

/// Loaded model file.
pub struct CrModel {
    file: ModelFile,
    model: MlpModel,
}

/// Loaded EMB1 table.
pub struct CrEmbeddings {
    table: EmbeddingMatrix,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(e: &Error) -> CrStatus {
    match e {
        Error::Io { .. } => CrStatus::Io,
        Error::BadMagic { .. }
        | Error::DimMismatch { .. }
        | Error::TruncatedPayload { .. }
        | Error::ModelFormat(_)
        | Error::Json(_) => CrStatus::Format,
        Error::ShapeMismatch(_)
        | Error::LengthMismatch { .. }
        | Error::WidthMismatch { .. }
        | Error::IndexOutOfRange { .. } => CrStatus::Shape,
        _ => CrStatus::InvalidArgument,
    }
}

struct Fail(CrStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(CrStatus::NullPointer, format!("`{what}` is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> CrStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            CrStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            CrStatus::Panic
        }
    }
}

/// Slice from a (pointer, length) pair; a null pointer is allowed only for
/// length 0.
unsafe fn input<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn output<'a, T>(p: *mut T, len: usize, what: &str) -> Result<&'a mut [T], Fail> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts_mut(p, len))
}

unsafe fn out_ref<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(CrStatus::InvalidArgument, format!("`{what}` is not UTF-8")))
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn cr_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Static, NUL-terminated library version.
#[no_mangle]
pub extern "C" fn cr_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// NDCG of relevance labels listed in ranked order.
///
/// # Safety
/// `relevance` must point to `len` readable bytes (or be null with `len` 0);
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cr_ndcg(relevance: *const u8, len: usize, out: *mut f64) -> CrStatus {
    guard(|| {
        let rel = input(relevance, len, "relevance")?;
        *out_ref(out, "out")? = ndcg(rel)?;
        Ok(())
    })
}

/// Reciprocal rank of the first relevant label.
///
/// # Safety
/// As [`cr_ndcg`].
#[no_mangle]
pub unsafe extern "C" fn cr_mrr(relevance: *const u8, len: usize, out: *mut f64) -> CrStatus {
    guard(|| {
        let rel = input(relevance, len, "relevance")?;
        *out_ref(out, "out")? = mrr(rel)?;
        Ok(())
    })
}

/// Two-sided paired t-test of `a − b`.
///
/// # Safety
/// `a` and `b` must each point to `n` readable doubles; `t_statistic` and
/// `p_value` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn cr_paired_ttest(
    a: *const f64,
    b: *const f64,
    n: usize,
    t_statistic: *mut f64,
    p_value: *mut f64,
) -> CrStatus {
    guard(|| {
        let r = paired_ttest(input(a, n, "a")?, input(b, n, "b")?)?;
        *out_ref(t_statistic, "t_statistic")? = r.t_statistic;
        *out_ref(p_value, "p_value")? = r.p_value;
        Ok(())
    })
}

/// RankNet lambdas `∂C/∂s_i` and the pairwise cost for one group.
///
/// # Safety
/// `scores`, `relevance` and `lambdas` must each cover `n` elements; `cost`
/// may be null.
#[no_mangle]
pub unsafe extern "C" fn cr_lambda_gradients(
    scores: *const f64,
    relevance: *const u8,
    n: usize,
    sigma: f64,
    lambdas: *mut f64,
    cost: *mut f64,
) -> CrStatus {
    guard(|| {
        let set = lambda_gradients(input(scores, n, "scores")?, input(relevance, n, "relevance")?, sigma)?;
        output(lambdas, n, "lambdas")?.copy_from_slice(&set.lambdas);
        if let Some(c) = cost.as_mut() {
            *c = set.cost;
        }
        Ok(())
    })
}

/// Loads an MDL1 file into a new handle.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cr_model_load(path: *const c_char, out: *mut *mut CrModel) -> CrStatus {
    guard(|| {
        let slot = out_ref(out, "out")?;
        *slot = ptr::null_mut();
        let file = ModelFile::load(Path::new(text(path, "path")?))?;
        let model = file.to_model()?;
        *slot = Box::into_raw(Box::new(CrModel { file, model }));
        Ok(())
    })
}

/// Releases a model handle; null is ignored.
///
/// # Safety
/// `model` must come from [`cr_model_load`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cr_model_free(model: *mut CrModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Network input width, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cr_model_input_dim(model: *const CrModel) -> usize {
    model.as_ref().map_or(0, |m| m.model.config().input_dim)
}

/// Network output width, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cr_model_output_dim(model: *const CrModel) -> usize {
    model.as_ref().map_or(0, |m| m.model.config().output_dim)
}

fn check_out_len(expected: usize, got: usize) -> Result<(), Fail> {
    if got != expected {
        return Err(Fail(
            CrStatus::Shape,
            format!("output buffer holds {got} values, {expected} needed"),
        ));
    }
    Ok(())
}

/// Eval-mode outputs for a row-major `rows × cols` batch; `out` receives
/// `rows × output_dim` values.
///
/// # Safety
/// `model` must be a live handle; `x` must cover `rows × cols` doubles and
/// `out` `out_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn cr_model_predict(
    model: *const CrModel,
    x: *const f64,
    rows: usize,
    cols: usize,
    out: *mut f64,
    out_len: usize,
) -> CrStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        let n = rows
            .checked_mul(cols)
            .ok_or_else(|| Fail(CrStatus::InvalidArgument, "rows × cols overflows".into()))?;
        let xs = input(x, n, "x")?;
        check_out_len(rows * m.model.config().output_dim, out_len)?;
        let y = m
            .model
            .predict(Inputs::Dense(&Matrix::from_vec(rows, cols, xs.to_vec())))?;
        output(out, out_len, "out")?.copy_from_slice(y.as_slice());
        Ok(())
    })
}

/// Predicts from raw pane text with the model's stored TFIDF vocabulary.
///
/// # Safety
/// `model` must be a live handle; `query` and `question` NUL-terminated
/// strings; `answers` an array of `n_answers` such strings (or null when
/// `n_answers` is 0); `out` must cover `out_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn cr_model_predict_text(
    model: *const CrModel,
    query: *const c_char,
    question: *const c_char,
    answers: *const *const c_char,
    n_answers: usize,
    out: *mut f64,
    out_len: usize,
) -> CrStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        let Some(VectorizerSpec::Tfidf(tfidf)) = &m.file.manifest.vectorizer else {
            return Err(Fail(CrStatus::InvalidArgument, "model has no TFIDF vocabulary".into()));
        };
        let answers = input(answers, n_answers, "answers")?
            .iter()
            .map(|&a| text(a, "answer").map(str::to_string))
            .collect::<Result<Vec<_>, _>>()?;
        let record = ClickRecord {
            query: text(query, "query")?.to_string(),
            question: text(question, "question")?.to_string(),
            answers,
            impression: Impression::High,
            engagement: 0,
        };
        check_out_len(m.model.config().output_dim, out_len)?;
        let v = [tfidf.transform(&record)];
        let y = m.model.predict(Inputs::Sparse(&v))?;
        output(out, out_len, "out")?.copy_from_slice(y.as_slice());
        Ok(())
    })
}

/// Loads an EMB1 file (width 5376) into a new handle.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cr_embeddings_load(path: *const c_char, out: *mut *mut CrEmbeddings) -> CrStatus {
    guard(|| {
        let slot = out_ref(out, "out")?;
        *slot = ptr::null_mut();
        let table = load_embeddings(Path::new(text(path, "path")?))?;
        *slot = Box::into_raw(Box::new(CrEmbeddings { table }));
        Ok(())
    })
}

/// Releases an embedding handle; null is ignored.
///
/// # Safety
/// `emb` must come from [`cr_embeddings_load`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cr_embeddings_free(emb: *mut CrEmbeddings) {
    if !emb.is_null() {
        drop(Box::from_raw(emb));
    }
}

/// Row count, or 0 for a null handle.
///
/// # Safety
/// `emb` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cr_embeddings_rows(emb: *const CrEmbeddings) -> usize {
    emb.as_ref().map_or(0, |e| e.table.n_rows())
}

/// Row width, or 0 for a null handle.
///
/// # Safety
/// `emb` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cr_embeddings_dim(emb: *const CrEmbeddings) -> usize {
    emb.as_ref().map_or(0, |e| e.table.dim())
}

/// Copies one row into `out`, which must hold exactly `dim` floats.
///
/// # Safety
/// `emb` must be a live handle and `out` must cover `out_len` floats.
#[no_mangle]
pub unsafe extern "C" fn cr_embeddings_row(
    emb: *const CrEmbeddings,
    row: usize,
    out: *mut f32,
    out_len: usize,
) -> CrStatus {
    guard(|| {
        let e = emb.as_ref().ok_or_else(|| null("emb"))?;
        if row >= e.table.n_rows() {
            return Err(Error::IndexOutOfRange {
                index: row,
                bound: e.table.n_rows(),
            }
            .into());
        }
        check_out_len(e.table.dim(), out_len)?;
        output(out, out_len, "out")?.copy_from_slice(e.table.row(row));
        Ok(())
    })
}
