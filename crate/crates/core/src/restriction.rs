//! Linear equality restrictions `R beta = r` on regression coefficients.
//!
//! Variable selection is the special case `R = [0 I]`, `r = 0`; general rows
//! can tie coefficients together (`b1 = b4`), scale them (`b1 = 2*b2`), or pin
//! weighted combinations (`b1 + b2 = 1`).

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// A set of `m` linearly independent restrictions on `p` coefficients.
/// `m = 0` encodes the unrestricted model.
#[derive(Debug, Clone, PartialEq)]
pub struct RestrictionSet {
    matrix: DMatrix<f64>,
    rhs: DVector<f64>,
}

impl RestrictionSet {
    /// Validates shapes, finiteness, and that `matrix` has full row rank.
    pub fn new(matrix: DMatrix<f64>, rhs: DVector<f64>) -> Result<Self> {
        let (m, p) = matrix.shape();
        if p == 0 {
            return Err(Error::Dimension(
                "restriction matrix must have at least one column".into(),
            ));
        }
        if rhs.len() != m {
            return Err(Error::Dimension(format!(
                "restriction matrix has {} rows but target vector has {} entries",
                m,
                rhs.len()
            )));
        }
        if matrix.iter().any(|v| !v.is_finite()) || rhs.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("restriction set".into()));
        }
        if m > 0 {
            let rank = linalg::numerical_rank(&matrix);
            if rank < m {
                return Err(Error::RestrictionRank { rank, m });
            }
        }
        Ok(Self { matrix, rhs })
    }

    /// The empty restriction set on `p` coefficients.
    pub fn unrestricted(p: usize) -> Self {
        Self {
            matrix: DMatrix::zeros(0, p),
            rhs: DVector::zeros(0),
        }
    }

    /// Stacks explicit rows into a restriction set, validating rank.
    pub fn from_rows(rows: &[RestrictionRow], p: usize) -> Result<Self> {
        for (i, row) in rows.iter().enumerate() {
            if row.coeffs.len() != p {
                return Err(Error::Dimension(format!(
                    "restriction row {} has {} coefficients, expected {}",
                    i + 1,
                    row.coeffs.len(),
                    p
                )));
            }
        }
        let matrix = DMatrix::from_fn(rows.len(), p, |i, j| rows[i].coeffs[j]);
        let rhs = DVector::from_fn(rows.len(), |i, _| rows[i].target);
        Self::new(matrix, rhs)
    }

    pub fn m(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn p(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn rhs(&self) -> &DVector<f64> {
        &self.rhs
    }

    /// Max violation `max_i |R beta - r|_i` of a coefficient vector.
    pub fn violation(&self, beta: &DVector<f64>) -> f64 {
        if self.m() == 0 {
            return 0.0;
        }
        (&self.matrix * beta - &self.rhs).amax()
    }

    /// Restriction with its columns permuted: column `j` of the result is
    /// column `perm[j]` of the original.
    pub fn permute_columns(&self, perm: &[usize]) -> RestrictionSet {
        let matrix = DMatrix::from_fn(self.m(), self.p(), |i, j| self.matrix[(i, perm[j])]);
        RestrictionSet {
            matrix,
            rhs: self.rhs.clone(),
        }
    }
}

/// One restriction row: coefficient weights and the target value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestrictionRow {
    pub coeffs: Vec<f64>,
    pub target: f64,
}

/// The variable-selection restriction keeping the first `k` slopes free:
/// `R = [0 I_{p-k}]`, `r = 0`, so `m = p - k`.
pub fn variable_selection_restriction(k: usize, p: usize) -> Result<RestrictionSet> {
    if p == 0 || k > p {
        return Err(Error::Dimension(format!(
            "subset size k = {k} must satisfy 0 <= k <= p = {p}"
        )));
    }
    let m = p - k;
    let mut matrix = DMatrix::zeros(m, p);
    for i in 0..m {
        matrix[(i, k + i)] = 1.0;
    }
    RestrictionSet::new(matrix, DVector::zeros(m))
}

/// Builds a restriction set by compiling equality expressions to rows.
pub fn equality_restriction(exprs: &[RestrictionExpr], p: usize) -> Result<RestrictionSet> {
    let rows: Vec<RestrictionRow> = exprs
        .iter()
        .map(|e| e.to_row(p))
        .collect::<Result<Vec<_>>>()?;
    RestrictionSet::from_rows(&rows, p)
}

/// A restriction written as an equation over coefficients, with 1-based
/// indices: `b1 = b4`, `b1 = 2*b2`, `b7 = 0`, `b1 + b2 = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct RestrictionExpr {
    /// Weight per 1-based coefficient index, already moved to the left side.
    terms: Vec<(usize, f64)>,
    target: f64,
}

impl RestrictionExpr {
    /// Builds `sum_j w_j * b_{i_j} = target` directly.
    pub fn from_terms(terms: Vec<(usize, f64)>, target: f64) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::Domain(
                "restriction expression has no coefficient terms".into(),
            ));
        }
        Ok(Self { terms, target })
    }

    /// Parses the shorthand grammar. Each side of `=` is a sum of terms,
    /// where a term is either a constant or `[weight *] b<index>`.
    pub fn parse(text: &str) -> Result<Self> {
        let compact: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        let mut sides = compact.split('=');
        let (lhs, rhs) = match (sides.next(), sides.next(), sides.next()) {
            (Some(l), Some(r), None) if !l.is_empty() && !r.is_empty() => (l, r),
            _ => {
                return Err(Error::Domain(format!(
                    "restriction `{text}` must have exactly one `=` with both sides nonempty"
                )))
            }
        };
        let mut terms: Vec<(usize, f64)> = Vec::new();
        let mut target = 0.0;
        for (side, sign) in [(lhs, 1.0), (rhs, -1.0)] {
            for (chunk_sign, chunk) in split_terms(side, text)? {
                let w = sign * chunk_sign;
                match parse_term(chunk, text)? {
                    Term::Coefficient(idx, weight) => terms.push((idx, w * weight)),
                    Term::Constant(c) => target -= w * c,
                }
            }
        }
        Self::from_terms(terms, target)
    }

    /// Expands to a dense row over `p` coefficients, validating indices.
    pub fn to_row(&self, p: usize) -> Result<RestrictionRow> {
        let mut coeffs = vec![0.0; p];
        for &(idx, w) in &self.terms {
            if idx == 0 || idx > p {
                return Err(Error::Dimension(format!(
                    "coefficient index b{idx} out of range 1..={p}"
                )));
            }
            coeffs[idx - 1] += w;
        }
        Ok(RestrictionRow {
            coeffs,
            target: self.target,
        })
    }
}

enum Term {
    Coefficient(usize, f64),
    Constant(f64),
}

/// Splits one side into signed chunks at top-level `+`/`-`, keeping
/// exponent signs (`1e-3`) intact.
fn split_terms<'a>(side: &'a str, original: &str) -> Result<Vec<(f64, &'a str)>> {
    let bytes = side.as_bytes();
    let mut out = Vec::new();
    let mut start = 0usize;
    let mut pos = 0usize;
    while pos < bytes.len() {
        let c = bytes[pos] as char;
        if (c == '+' || c == '-') && pos > start {
            let prev = bytes[pos - 1] as char;
            if prev != 'e' && prev != 'E' {
                out.push((start, pos));
                start = pos;
            }
        }
        pos += 1;
    }
    out.push((start, bytes.len()));
    out.into_iter()
        .map(|(a, b)| {
            let chunk = &side[a..b];
            let (sign, rest) = match chunk.strip_prefix('-') {
                Some(r) => (-1.0, r),
                None => (1.0, chunk.strip_prefix('+').unwrap_or(chunk)),
            };
            if rest.is_empty() {
                return Err(Error::Domain(format!(
                    "empty term in restriction `{original}`"
                )));
            }
            Ok((sign, rest))
        })
        .collect()
}

fn parse_term(chunk: &str, original: &str) -> Result<Term> {
    let bad = || Error::Domain(format!("cannot parse term `{chunk}` in restriction `{original}`"));
    match chunk.find(['b', 'B']) {
        None => chunk.parse::<f64>().map(Term::Constant).map_err(|_| bad()),
        Some(pos) => {
            let weight = if pos == 0 {
                1.0
            } else {
                let head = chunk[..pos].strip_suffix('*').unwrap_or(&chunk[..pos]);
                head.parse::<f64>().map_err(|_| bad())?
            };
            let idx: usize = chunk[pos + 1..].parse().map_err(|_| bad())?;
            Ok(Term::Coefficient(idx, weight))
        }
    }
}
