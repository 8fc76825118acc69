//! Sparse parity-check matrices over GF(2^m) and their Tanner graphs.
//!
//! A code is the null space `{x : Hx = 0}` of an M-by-N matrix `H = {h_cv}`
//! with nonzero entries drawn from GF(2^m). Row `c` encodes the parity check
//! `sum_v h_cv x_v = 0`. The matrix is stored as row and column adjacency
//! lists (the two views are kept transposed copies of each other), which is
//! also the Tanner-graph adjacency used by the decoders.
//!
//! The text format is the non-binary alist layout: dimensions, field size,
//! max weights, per-column and per-row weights, then per-column and per-row
//! entry lists as `index coefficient` pairs (1-based indices, coefficients as
//! symbol integers). Trailing `0 0` padding pairs are tolerated on entry
//! lines.

use crate::gf::{FieldTable, Gf};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt::Write as _;
use thiserror::Error;

/// Resampling budget for the random regular construction.
pub const DEFAULT_CONSTRUCTION_ROUNDS: usize = 100;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodeError {
    #[error("j*N = {j}*{n} must be divisible by row weight k = {k}")]
    Divisibility { n: usize, j: usize, k: usize },
    #[error("row weight k = {k} exceeds code length N = {n}")]
    RowWeightTooLarge { k: usize, n: usize },
    #[error("degenerate dimensions: N = {n}, j = {j}, k = {k}")]
    DegenerateDimensions { n: usize, j: usize, k: usize },
    #[error("failed to avoid repeated edges after {rounds} resampling rounds")]
    ConstructionFailed { rounds: usize },
    #[error("zero coefficient at row {row}, column {col}")]
    ZeroCoefficient { row: usize, col: usize },
    #[error("entry ({row}, {col}) out of range for {rows}x{cols} matrix")]
    EntryOutOfRange { row: usize, col: usize, rows: usize, cols: usize },
    #[error("coefficient {value} out of range for field of size {q}")]
    CoefficientOutOfRange { value: usize, q: usize },
    #[error("repeated entry at row {row}, column {col}")]
    RepeatedEntry { row: usize, col: usize },
}

/// Parse failure for the alist text format, with the offending line.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("alist line {line}: {message}")]
pub struct AlistError {
    pub line: usize,
    pub message: String,
}

impl AlistError {
    fn new(line: usize, message: impl Into<String>) -> Self {
        AlistError { line, message: message.into() }
    }
}

/// An M-by-N sparse matrix over GF(2^m) with all stored entries nonzero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseParityCheck {
    m: u32,
    n_cols: usize,
    n_rows: usize,
    /// Per row: `(column, coefficient)`, ascending by column.
    rows: Vec<Vec<(usize, Gf)>>,
    /// Per column: `(row, coefficient)`, ascending by row.
    cols: Vec<Vec<(usize, Gf)>>,
}

impl SparseParityCheck {
    /// Build from per-row entry lists. Coefficients must be nonzero and in
    /// range for GF(2^m); repeated positions are rejected.
    pub fn from_rows(
        m: u32,
        n_cols: usize,
        row_entries: Vec<Vec<(usize, Gf)>>,
    ) -> Result<Self, CodeError> {
        let n_rows = row_entries.len();
        let q = 1usize << m;
        let mut rows: Vec<Vec<(usize, Gf)>> = Vec::with_capacity(n_rows);
        let mut cols: Vec<Vec<(usize, Gf)>> = vec![Vec::new(); n_cols];
        for (r, mut entries) in row_entries.into_iter().enumerate() {
            entries.sort_by_key(|&(c, _)| c);
            for win in entries.windows(2) {
                if win[0].0 == win[1].0 {
                    return Err(CodeError::RepeatedEntry { row: r, col: win[0].0 });
                }
            }
            for &(c, h) in &entries {
                if c >= n_cols {
                    return Err(CodeError::EntryOutOfRange {
                        row: r,
                        col: c,
                        rows: n_rows,
                        cols: n_cols,
                    });
                }
                if h.is_zero() {
                    return Err(CodeError::ZeroCoefficient { row: r, col: c });
                }
                if h.0 as usize >= q {
                    return Err(CodeError::CoefficientOutOfRange { value: h.0 as usize, q });
                }
                cols[c].push((r, h));
            }
            rows.push(entries);
        }
        Ok(SparseParityCheck { m, n_cols, n_rows, rows, cols })
    }

    /// Random (j,k)-regular construction by socket matching: each variable
    /// node exposes `j` sockets, each check node `k`, and a uniform matching
    /// is drawn. Matchings with repeated (row, column) pairs are resampled up
    /// to [`DEFAULT_CONSTRUCTION_ROUNDS`] times. Coefficients are uniform
    /// over the nonzero field elements. Deterministic for a fixed seed.
    pub fn generate_regular(
        n: usize,
        j: usize,
        k: usize,
        field: &FieldTable,
        seed: u64,
    ) -> Result<Self, CodeError> {
        if n == 0 || j == 0 || k == 0 {
            return Err(CodeError::DegenerateDimensions { n, j, k });
        }
        if !(j * n).is_multiple_of(k) {
            return Err(CodeError::Divisibility { n, j, k });
        }
        if k > n {
            return Err(CodeError::RowWeightTooLarge { k, n });
        }
        let m_rows = j * n / k;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut var_sockets: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat_n(v, j)).collect();
        var_sockets.shuffle(&mut rng);
        let total = var_sockets.len();

        // Repeated (row, column) pairs are repaired by resampling the
        // offending sockets; a full re-shuffle would almost never come out
        // clean for wide rows, since the expected collision count of a fresh
        // matching is about (k-1)/2 regardless of N.
        for _ in 0..DEFAULT_CONSTRUCTION_ROUNDS {
            let mut seen = vec![false; m_rows * n];
            let mut duplicates = Vec::new();
            for (socket, &v) in var_sockets.iter().enumerate() {
                let slot = (socket / k) * n + v;
                if seen[slot] {
                    duplicates.push(socket);
                } else {
                    seen[slot] = true;
                }
            }
            if duplicates.is_empty() {
                let mut row_entries: Vec<Vec<(usize, Gf)>> = vec![Vec::with_capacity(k); m_rows];
                for (socket, &v) in var_sockets.iter().enumerate() {
                    let c = socket / k;
                    let coeff = Gf(rng.gen_range(1..field.size()) as u16);
                    row_entries[c].push((v, coeff));
                }
                return Self::from_rows(field.degree(), n, row_entries);
            }
            for socket in duplicates {
                let other = rng.gen_range(0..total);
                var_sockets.swap(socket, other);
            }
        }
        Err(CodeError::ConstructionFailed { rounds: DEFAULT_CONSTRUCTION_ROUNDS })
    }

    pub fn degree(&self) -> u32 {
        self.m
    }

    /// Field size 2^m.
    pub fn field_size(&self) -> usize {
        1 << self.m
    }

    /// Code length N in symbols.
    pub fn num_cols(&self) -> usize {
        self.n_cols
    }

    /// Number of parity checks M.
    pub fn num_rows(&self) -> usize {
        self.n_rows
    }

    pub fn num_edges(&self) -> usize {
        self.rows.iter().map(|r| r.len()).sum()
    }

    /// Design rate `1 - M/N`.
    pub fn rate(&self) -> f64 {
        1.0 - self.n_rows as f64 / self.n_cols as f64
    }

    pub fn row(&self, c: usize) -> &[(usize, Gf)] {
        &self.rows[c]
    }

    pub fn col(&self, v: usize) -> &[(usize, Gf)] {
        &self.cols[v]
    }

    pub fn row_weights(&self) -> Vec<usize> {
        self.rows.iter().map(|r| r.len()).collect()
    }

    pub fn col_weights(&self) -> Vec<usize> {
        self.cols.iter().map(|c| c.len()).collect()
    }

    /// `Some((j, k))` when every column has weight j and every row weight k.
    pub fn regularity(&self) -> Option<(usize, usize)> {
        let j = self.cols.first()?.len();
        let k = self.rows.first()?.len();
        if self.cols.iter().all(|c| c.len() == j) && self.rows.iter().all(|r| r.len() == k) {
            Some((j, k))
        } else {
            None
        }
    }

    /// Syndrome `s_c = sum_{v} h_cv x_v` over the field.
    ///
    /// # Panics
    ///
    /// Panics if `x.len() != N`.
    pub fn syndrome(&self, field: &FieldTable, x: &[Gf]) -> Vec<Gf> {
        assert_eq!(x.len(), self.n_cols, "word length != code length");
        self.rows
            .iter()
            .map(|row| {
                row.iter()
                    .fold(Gf::ZERO, |acc, &(v, h)| field.add(acc, field.mul(h, x[v])))
            })
            .collect()
    }

    /// True iff the syndrome is all-zero.
    pub fn is_codeword(&self, field: &FieldTable, x: &[Gf]) -> bool {
        assert_eq!(x.len(), self.n_cols, "word length != code length");
        self.rows.iter().all(|row| {
            row.iter()
                .fold(Gf::ZERO, |acc, &(v, h)| field.add(acc, field.mul(h, x[v])))
                .is_zero()
        })
    }

    /// Serialize to the non-binary alist text format with canonical ascending
    /// entry order and no padding.
    pub fn to_alist(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} {}", self.n_cols, self.n_rows);
        let _ = writeln!(out, "{}", self.field_size());
        let max_col = self.cols.iter().map(|c| c.len()).max().unwrap_or(0);
        let max_row = self.rows.iter().map(|r| r.len()).max().unwrap_or(0);
        let _ = writeln!(out, "{} {}", max_col, max_row);
        let weights = |ws: Vec<usize>| {
            ws.iter().map(|w| w.to_string()).collect::<Vec<_>>().join(" ")
        };
        let _ = writeln!(out, "{}", weights(self.col_weights()));
        let _ = writeln!(out, "{}", weights(self.row_weights()));
        for col in &self.cols {
            let line = col
                .iter()
                .map(|&(r, h)| format!("{} {}", r + 1, h.0))
                .collect::<Vec<_>>()
                .join(" ");
            let _ = writeln!(out, "{}", line);
        }
        for row in &self.rows {
            let line = row
                .iter()
                .map(|&(c, h)| format!("{} {}", c + 1, h.0))
                .collect::<Vec<_>>()
                .join(" ");
            let _ = writeln!(out, "{}", line);
        }
        out
    }

    /// Parse the non-binary alist text format.
    pub fn from_alist(text: &str) -> Result<Self, AlistError> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let mut next_line = move || -> Result<(usize, Vec<i64>), AlistError> {
            for (no, raw) in lines.by_ref() {
                let trimmed = raw.trim();
                if trimmed.is_empty() {
                    continue;
                }
                let mut vals = Vec::new();
                for tok in trimmed.split_whitespace() {
                    let v: i64 = tok
                        .parse()
                        .map_err(|_| AlistError::new(no, format!("invalid integer '{tok}'")))?;
                    if v < 0 {
                        return Err(AlistError::new(no, format!("negative value {v}")));
                    }
                    vals.push(v);
                }
                return Ok((no, vals));
            }
            Err(AlistError::new(0, "unexpected end of input"))
        };

        let (no, dims) = next_line()?;
        if dims.len() != 2 {
            return Err(AlistError::new(no, "expected 'N M' header"));
        }
        let (n_cols, n_rows) = (dims[0] as usize, dims[1] as usize);
        if n_cols == 0 || n_rows == 0 {
            return Err(AlistError::new(no, "empty matrix dimensions"));
        }
        if n_cols > 1_000_000 || n_rows > 1_000_000 {
            return Err(AlistError::new(no, "matrix dimensions out of supported range"));
        }

        let (no, qline) = next_line()?;
        if qline.len() != 1 {
            return Err(AlistError::new(no, "expected field size q"));
        }
        let q = qline[0] as usize;
        if !q.is_power_of_two() || !(2..=1024).contains(&q) {
            return Err(AlistError::new(no, format!("field size {q} is not 2^m with m in 1..=10")));
        }
        let m = q.trailing_zeros();

        let (no, maxes) = next_line()?;
        if maxes.len() != 2 {
            return Err(AlistError::new(no, "expected 'max_col_weight max_row_weight'"));
        }
        let (max_col, max_row) = (maxes[0] as usize, maxes[1] as usize);

        let (no, col_w) = next_line()?;
        if col_w.len() != n_cols {
            return Err(AlistError::new(no, format!("expected {n_cols} column weights, got {}", col_w.len())));
        }
        let col_w: Vec<usize> = col_w.into_iter().map(|w| w as usize).collect();
        if let Some(&w) = col_w.iter().find(|&&w| w > n_rows) {
            return Err(AlistError::new(no, format!("column weight {w} exceeds row count {n_rows}")));
        }
        if col_w.iter().copied().max().unwrap_or(0) != max_col {
            return Err(AlistError::new(no, format!("column weights disagree with declared max {max_col}")));
        }

        let (no, row_w) = next_line()?;
        if row_w.len() != n_rows {
            return Err(AlistError::new(no, format!("expected {n_rows} row weights, got {}", row_w.len())));
        }
        let row_w: Vec<usize> = row_w.into_iter().map(|w| w as usize).collect();
        if let Some(&w) = row_w.iter().find(|&&w| w > n_cols) {
            return Err(AlistError::new(no, format!("row weight {w} exceeds column count {n_cols}")));
        }
        if row_w.iter().copied().max().unwrap_or(0) != max_row {
            return Err(AlistError::new(no, format!("row weights disagree with declared max {max_row}")));
        }
        if col_w.iter().sum::<usize>() != row_w.iter().sum::<usize>() {
            return Err(AlistError::new(no, "column and row weights count different edge totals"));
        }

        // Entry pair lines: "index coeff" pairs, 1-based, "0 0" padding allowed.
        let parse_pairs = |no: usize,
                           vals: Vec<i64>,
                           weight: usize,
                           limit: usize|
         -> Result<Vec<(usize, Gf)>, AlistError> {
            if !vals.len().is_multiple_of(2) {
                return Err(AlistError::new(no, "odd number of values in entry line"));
            }
            let mut pairs = Vec::with_capacity(weight);
            let mut padding = false;
            for chunk in vals.chunks(2) {
                let (idx, coeff) = (chunk[0] as usize, chunk[1] as usize);
                if idx == 0 && coeff == 0 {
                    padding = true;
                    continue;
                }
                if padding {
                    return Err(AlistError::new(no, "entry after zero padding"));
                }
                if idx == 0 || idx > limit {
                    return Err(AlistError::new(no, format!("index {idx} out of range 1..={limit}")));
                }
                if coeff == 0 {
                    return Err(AlistError::new(no, "zero coefficient"));
                }
                if coeff >= q {
                    return Err(AlistError::new(no, format!("coefficient {coeff} out of range for q={q}")));
                }
                pairs.push((idx - 1, Gf(coeff as u16)));
            }
            if pairs.len() != weight {
                return Err(AlistError::new(
                    no,
                    format!("expected {weight} entries, got {}", pairs.len()),
                ));
            }
            Ok(pairs)
        };

        let mut cols: Vec<Vec<(usize, Gf)>> = Vec::with_capacity(n_cols);
        for &weight in &col_w {
            let (no, vals) = next_line()?;
            let mut pairs = parse_pairs(no, vals, weight, n_rows)?;
            pairs.sort_by_key(|&(r, _)| r);
            for win in pairs.windows(2) {
                if win[0].0 == win[1].0 {
                    return Err(AlistError::new(no, format!("repeated row index {}", win[0].0 + 1)));
                }
            }
            cols.push(pairs);
        }

        let mut rows: Vec<Vec<(usize, Gf)>> = Vec::with_capacity(n_rows);
        for (c, &weight) in row_w.iter().enumerate() {
            let (no, vals) = next_line()?;
            let mut pairs = parse_pairs(no, vals, weight, n_cols)?;
            pairs.sort_by_key(|&(v, _)| v);
            // Cross-check against the column view.
            for &(v, h) in &pairs {
                let found = cols[v].iter().any(|&(r, hc)| r == c && hc == h);
                if !found {
                    return Err(AlistError::new(
                        no,
                        format!("row section entry ({}, {}) disagrees with column section", c + 1, v + 1),
                    ));
                }
            }
            rows.push(pairs);
        }

        let matrix = SparseParityCheck { m, n_cols, n_rows, rows, cols };
        if matrix.num_edges() != col_w.iter().sum::<usize>() {
            return Err(AlistError::new(0, "edge count mismatch between sections"));
        }
        Ok(matrix)
    }
}

/// One adjacency entry of the Tanner graph, seen from either side.
///
/// `v2c_slot` indexes the variable-major message array and `c2v_slot` the
/// check-major one, so each phase of a message-passing sweep writes a
/// contiguous block per node.
#[derive(Debug, Clone, Copy)]
pub struct EdgeEnd {
    pub peer: usize,
    pub coeff: Gf,
    pub v2c_slot: usize,
    pub c2v_slot: usize,
}

/// Bipartite adjacency of variable and check nodes with per-edge message
/// slots. Immutable after construction.
#[derive(Debug, Clone)]
pub struct TannerGraph {
    n_vars: usize,
    n_checks: usize,
    n_edges: usize,
    check_adj: Vec<Vec<EdgeEnd>>,
    var_adj: Vec<Vec<EdgeEnd>>,
}

impl TannerGraph {
    pub fn new(h: &SparseParityCheck) -> Self {
        let n_vars = h.num_cols();
        let n_checks = h.num_rows();
        let mut var_slot_base = Vec::with_capacity(n_vars + 1);
        var_slot_base.push(0);
        for v in 0..n_vars {
            var_slot_base.push(var_slot_base[v] + h.col(v).len());
        }

        let mut check_adj: Vec<Vec<EdgeEnd>> = Vec::with_capacity(n_checks);
        let mut var_adj: Vec<Vec<EdgeEnd>> =
            (0..n_vars).map(|v| Vec::with_capacity(h.col(v).len())).collect();
        let mut c2v_slot = 0;
        for c in 0..n_checks {
            let mut ends = Vec::with_capacity(h.row(c).len());
            for &(v, coeff) in h.row(c) {
                let pos = h.col(v).iter().position(|&(r, _)| r == c).expect("transposed views agree");
                let v2c_slot = var_slot_base[v] + pos;
                ends.push(EdgeEnd { peer: v, coeff, v2c_slot, c2v_slot });
                var_adj[v].push(EdgeEnd { peer: c, coeff, v2c_slot, c2v_slot });
                c2v_slot += 1;
            }
            check_adj.push(ends);
        }
        // Keep each variable's neighbours in v2c slot order.
        for adj in var_adj.iter_mut() {
            adj.sort_by_key(|e| e.v2c_slot);
        }
        TannerGraph { n_vars, n_checks, n_edges: c2v_slot, check_adj, var_adj }
    }

    pub fn num_vars(&self) -> usize {
        self.n_vars
    }

    pub fn num_checks(&self) -> usize {
        self.n_checks
    }

    pub fn num_edges(&self) -> usize {
        self.n_edges
    }

    /// Variable-node neighbours of check `c`.
    pub fn check(&self, c: usize) -> &[EdgeEnd] {
        &self.check_adj[c]
    }

    /// Check-node neighbours of variable `v`.
    pub fn var(&self, v: usize) -> &[EdgeEnd] {
        &self.var_adj[v]
    }

    pub fn check_degrees(&self) -> impl Iterator<Item = usize> + '_ {
        self.check_adj.iter().map(|a| a.len())
    }

    pub fn var_degrees(&self) -> impl Iterator<Item = usize> + '_ {
        self.var_adj.iter().map(|a| a.len())
    }
}
