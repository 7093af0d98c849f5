//! Sparse parity-check matrices: alist I/O, PEG construction, systematic
//! encoding and flooding sum-product decoding.

use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Binary parity-check matrix stored as row and column adjacency lists.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParityCheck {
    rows: usize,
    cols: usize,
    row_adj: Vec<Vec<usize>>,
    col_adj: Vec<Vec<usize>>,
    rank: usize,
}

impl ParityCheck {
    /// Builds a matrix from `(row, col)` entries; duplicates cancel over GF(2).
    pub fn from_entries(rows: usize, cols: usize, entries: &[(usize, usize)]) -> Result<Self> {
        if rows == 0 || cols == 0 || rows >= cols {
            return Err(Error::InvalidParameter(format!("parity-check matrix must be wide, got {rows}x{cols}")));
        }
        let mut sorted: Vec<(usize, usize)> = entries.to_vec();
        sorted.sort_unstable();
        let mut cleaned: Vec<(usize, usize)> = Vec::with_capacity(sorted.len());
        for e in sorted {
            if e.0 >= rows || e.1 >= cols {
                return Err(Error::InvalidParameter(format!("entry {e:?} outside {rows}x{cols}")));
            }
            if cleaned.last() == Some(&e) {
                cleaned.pop();
            } else {
                cleaned.push(e);
            }
        }
        let mut row_adj = vec![Vec::new(); rows];
        let mut col_adj = vec![Vec::new(); cols];
        for &(r, c) in &cleaned {
            row_adj[r].push(c);
            col_adj[c].push(r);
        }
        if let Some(c) = col_adj.iter().position(|c| c.is_empty()) {
            return Err(Error::InvalidParameter(format!("column {c} has no entries")));
        }
        let mut h = ParityCheck { rows, cols, row_adj, col_adj, rank: 0 };
        h.rank = DenseRows::from_check(&h).rank();
        Ok(h)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Blocklength `n`.
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Dimension `k = n − rank`.
    pub fn dimension(&self) -> usize {
        self.cols - self.rank
    }

    /// Nominal rate `1 − rows/cols`.
    pub fn design_rate(&self) -> f64 {
        1.0 - self.rows as f64 / self.cols as f64
    }

    /// Actual rate `k/n`.
    pub fn rate(&self) -> f64 {
        self.dimension() as f64 / self.cols as f64
    }

    pub fn row(&self, r: usize) -> &[usize] {
        &self.row_adj[r]
    }

    pub fn col(&self, c: usize) -> &[usize] {
        &self.col_adj[c]
    }

    pub fn edges(&self) -> usize {
        self.row_adj.iter().map(Vec::len).sum()
    }

    /// `H·c = 0` over GF(2).
    pub fn is_codeword(&self, bits: &[u8]) -> bool {
        bits.len() == self.cols && self.row_adj.iter().all(|r| r.iter().fold(0u8, |acc, &c| acc ^ bits[c]) == 0)
    }

    /// Parses the alist format: `n m`, maximum column/row weights, the
    /// column and row weight lists, then 1-based row indices per column and
    /// column indices per row (zero padding allowed). Both halves must agree.
    pub fn from_alist(text: &str) -> Result<Self> {
        let mut it = text.split_whitespace().map(|t| {
            t.parse::<usize>().map_err(|_| Error::Parse(format!("alist: invalid integer {t:?}")))
        });
        let mut next = |what: &str| -> Result<usize> {
            it.next().ok_or_else(|| Error::Parse(format!("alist: unexpected end of input reading {what}")))?
        };
        let n = next("n")?;
        let m = next("m")?;
        let max_col = next("max column weight")?;
        let max_row = next("max row weight")?;
        let col_w = (0..n).map(|_| next("column weights")).collect::<Result<Vec<_>>>()?;
        let row_w = (0..m).map(|_| next("row weights")).collect::<Result<Vec<_>>>()?;
        if col_w.iter().any(|&w| w > max_col) || row_w.iter().any(|&w| w > max_row) {
            return Err(Error::Parse("alist: weight exceeds the declared maximum".into()));
        }
        let mut entries = Vec::new();
        for (c, &w) in col_w.iter().enumerate() {
            let mut seen = 0;
            for _ in 0..max_col {
                let r = next("column entries")?;
                if r == 0 {
                    continue;
                }
                if r > m {
                    return Err(Error::Parse(format!("alist: row index {r} out of range")));
                }
                entries.push((r - 1, c));
                seen += 1;
            }
            if seen != w {
                return Err(Error::Parse(format!("alist: column {c} lists {seen} entries, weight {w}")));
            }
        }
        let mut row_entries = Vec::new();
        for (r, &w) in row_w.iter().enumerate() {
            let mut seen = 0;
            for _ in 0..max_row {
                let c = next("row entries")?;
                if c == 0 {
                    continue;
                }
                if c > n {
                    return Err(Error::Parse(format!("alist: column index {c} out of range")));
                }
                row_entries.push((r, c - 1));
                seen += 1;
            }
            if seen != w {
                return Err(Error::Parse(format!("alist: row {r} lists {seen} entries, weight {w}")));
            }
        }
        entries.sort_unstable();
        row_entries.sort_unstable();
        if entries != row_entries {
            return Err(Error::Parse("alist: column and row lists disagree".into()));
        }
        ParityCheck::from_entries(m, n, &entries)
    }

    /// Writes the alist format with zero padding to the maximum weights.
    pub fn to_alist(&self) -> String {
        let max_col = self.col_adj.iter().map(Vec::len).max().unwrap_or(0);
        let max_row = self.row_adj.iter().map(Vec::len).max().unwrap_or(0);
        let mut s = String::new();
        let join = |v: &mut dyn Iterator<Item = usize>| v.map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
        let _ = writeln!(s, "{} {}", self.cols, self.rows);
        let _ = writeln!(s, "{max_col} {max_row}");
        let _ = writeln!(s, "{}", join(&mut self.col_adj.iter().map(Vec::len)));
        let _ = writeln!(s, "{}", join(&mut self.row_adj.iter().map(Vec::len)));
        for col in &self.col_adj {
            let padded = col.iter().map(|r| r + 1).chain(std::iter::repeat(0)).take(max_col);
            let _ = writeln!(s, "{}", join(&mut padded.into_iter()));
        }
        for row in &self.row_adj {
            let padded = row.iter().map(|c| c + 1).chain(std::iter::repeat(0)).take(max_row);
            let _ = writeln!(s, "{}", join(&mut padded.into_iter()));
        }
        s
    }

    pub fn load_alist(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_alist(&std::fs::read_to_string(path)?)
    }

    pub fn save_alist(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_alist())?;
        Ok(())
    }

    /// Column-regular code by progressive edge growth: each new edge of a
    /// variable node goes to the check node farthest from it in the current
    /// graph (unreachable counts as infinitely far), among checks below the
    /// row-weight cap; remaining ties go to the lowest degree, then to the
    /// seeded RNG.
    pub fn peg(n: usize, m: usize, var_degree: usize, seed: u64) -> Result<Self> {
        if var_degree == 0 || var_degree > m || m >= n {
            return Err(Error::InvalidParameter(format!("invalid PEG parameters n={n} m={m} dv={var_degree}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut var_adj: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut chk_adj: Vec<Vec<usize>> = vec![Vec::new(); m];
        let cap = (n * var_degree).div_ceil(m);
        let mut order: Vec<usize> = (0..m).collect();

        for v in 0..n {
            for _ in 0..var_degree {
                let dist = check_distances(v, &var_adj, &chk_adj);
                order.shuffle(&mut rng);
                let key = |c: usize| (dist[c], std::cmp::Reverse(chk_adj[c].len()));
                let chosen = order
                    .iter()
                    .copied()
                    .filter(|&c| chk_adj[c].len() < cap && dist[c] > 0)
                    .max_by_key(|&c| key(c))
                    .or_else(|| order.iter().copied().filter(|&c| dist[c] > 0).max_by_key(|&c| key(c)))
                    .expect("a free check node");
                var_adj[v].push(chosen);
                chk_adj[chosen].push(v);
            }
        }
        let entries: Vec<(usize, usize)> =
            var_adj.iter().enumerate().flat_map(|(v, cs)| cs.iter().map(move |&c| (c, v))).collect();
        ParityCheck::from_entries(m, n, &entries)
    }

    /// Length of the shortest cycle in the Tanner graph (0 if acyclic).
    pub fn girth(&self) -> usize {
        let mut best = usize::MAX;
        // BFS from each variable node over the bipartite graph
        for start in 0..self.cols {
            let total = self.cols + self.rows;
            let mut dist = vec![usize::MAX; total];
            let mut parent = vec![usize::MAX; total];
            let mut queue = std::collections::VecDeque::new();
            dist[start] = 0;
            queue.push_back(start);
            while let Some(u) = queue.pop_front() {
                if 2 * dist[u] >= best {
                    break;
                }
                let neigh: Vec<usize> = if u < self.cols {
                    self.col_adj[u].iter().map(|c| self.cols + c).collect()
                } else {
                    self.row_adj[u - self.cols].clone()
                };
                for w in neigh {
                    if dist[w] == usize::MAX {
                        dist[w] = dist[u] + 1;
                        parent[w] = u;
                        queue.push_back(w);
                    } else if parent[u] != w {
                        best = best.min(dist[u] + dist[w] + 1);
                    }
                }
            }
        }
        if best == usize::MAX {
            0
        } else {
            best
        }
    }
}

/// BFS depth (in check layers) from variable `v` to every check node:
/// 0 for current neighbours, `usize::MAX` for unreachable checks.
fn check_distances(v: usize, var_adj: &[Vec<usize>], chk_adj: &[Vec<usize>]) -> Vec<usize> {
    let mut dist = vec![usize::MAX; chk_adj.len()];
    let mut seen_var = vec![false; var_adj.len()];
    seen_var[v] = true;
    let mut frontier: Vec<usize> = var_adj[v].clone();
    for &c in &frontier {
        dist[c] = 0;
    }
    let mut depth = 0;
    while !frontier.is_empty() {
        depth += 1;
        let mut layer = Vec::new();
        for &c in &frontier {
            for &u in &chk_adj[c] {
                if std::mem::replace(&mut seen_var[u], true) {
                    continue;
                }
                for &c2 in &var_adj[u] {
                    if dist[c2] == usize::MAX {
                        dist[c2] = depth;
                        layer.push(c2);
                    }
                }
            }
        }
        frontier = layer;
    }
    dist
}

/// Dense GF(2) rows as 64-bit words.
#[derive(Clone, Debug)]
struct DenseRows {
    words: usize,
    rows: Vec<Vec<u64>>,
}

impl DenseRows {
    fn from_check(h: &ParityCheck) -> Self {
        let words = h.cols.div_ceil(64);
        let rows = h
            .row_adj
            .iter()
            .map(|r| {
                let mut v = vec![0u64; words];
                for &c in r {
                    v[c / 64] ^= 1 << (c % 64);
                }
                v
            })
            .collect();
        DenseRows { words, rows }
    }

    fn get(row: &[u64], c: usize) -> bool {
        row[c / 64] >> (c % 64) & 1 == 1
    }

    /// Reduced row echelon form, taking pivot columns in `priority` order.
    /// Returns `(pivot row, pivot column)` pairs.
    fn reduce(&mut self, priority: &[usize]) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut next_row = 0;
        for &c in priority {
            if next_row == self.rows.len() {
                break;
            }
            let Some(r) = (next_row..self.rows.len()).find(|&r| Self::get(&self.rows[r], c)) else { continue };
            self.rows.swap(next_row, r);
            let pivot = self.rows[next_row].clone();
            for (i, row) in self.rows.iter_mut().enumerate() {
                if i != next_row && Self::get(row, c) {
                    for w in 0..self.words {
                        row[w] ^= pivot[w];
                    }
                }
            }
            pivots.push(c);
            next_row += 1;
        }
        self.rows.truncate(next_row);
        pivots
    }

    fn rank(mut self) -> usize {
        let cols = self.words * 64;
        let order: Vec<usize> = (0..cols).collect();
        self.reduce(&order).len()
    }
}

/// Systematic encoder: information bits are copied to `info_cols`, parity
/// bits on `parity_cols` follow from the reduced parity-check rows.
#[derive(Clone, Debug)]
pub struct SystematicEncoder {
    n: usize,
    info_cols: Vec<usize>,
    parity_cols: Vec<usize>,
    kind: EncoderKind,
}

#[derive(Clone, Debug)]
enum EncoderKind {
    /// `parity_cols[i] = Σ_j rows[i][info j]`, one reduced row per pivot.
    Dense { rows: Vec<Vec<u64>> },
    /// Dual-diagonal (IRA) parity part: accumulate the information syndrome.
    Accumulator { info_rows: Vec<Vec<usize>> },
}

impl SystematicEncoder {
    /// Derives an encoder by Gaussian elimination. Parity (pivot) columns are
    /// preferentially chosen from `parity_preference`, then from the
    /// remaining columns in descending order. An IRA dual-diagonal parity
    /// part in the last `rows` columns is detected and used directly.
    pub fn new(h: &ParityCheck, parity_preference: &[usize]) -> Result<Self> {
        if parity_preference.is_empty() {
            if let Some(enc) = Self::accumulator(h) {
                return Ok(enc);
            }
        }
        let mut priority: Vec<usize> = parity_preference.to_vec();
        let mut used = vec![false; h.cols];
        for &c in &priority {
            if c >= h.cols || used[c] {
                return Err(Error::Encoding(format!("invalid parity preference column {c}")));
            }
            used[c] = true;
        }
        priority.extend((0..h.cols).rev().filter(|&c| !used[c]));
        let mut dense = DenseRows::from_check(h);
        let parity_cols = dense.reduce(&priority);
        if parity_cols.len() != h.rank {
            return Err(Error::Encoding("elimination did not reproduce the matrix rank".into()));
        }
        let mut is_parity = vec![false; h.cols];
        for &c in &parity_cols {
            is_parity[c] = true;
        }
        let info_cols: Vec<usize> = (0..h.cols).filter(|&c| !is_parity[c]).collect();
        Ok(SystematicEncoder { n: h.cols, info_cols, parity_cols, kind: EncoderKind::Dense { rows: dense.rows } })
    }

    fn accumulator(h: &ParityCheck) -> Option<Self> {
        let (m, n) = (h.rows, h.cols);
        let k = n - m;
        for i in 0..m {
            let mut expected = vec![i];
            if i + 1 < m {
                expected.push(i + 1);
            }
            let mut col = h.col(k + i).to_vec();
            col.sort_unstable();
            if col != expected {
                return None;
            }
        }
        let info_rows = (0..m).map(|r| h.row(r).iter().copied().filter(|&c| c < k).collect()).collect();
        Some(SystematicEncoder {
            n,
            info_cols: (0..k).collect(),
            parity_cols: (k..n).collect(),
            kind: EncoderKind::Accumulator { info_rows },
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.info_cols.len()
    }

    pub fn info_cols(&self) -> &[usize] {
        &self.info_cols
    }

    pub fn parity_cols(&self) -> &[usize] {
        &self.parity_cols
    }

    pub fn is_accumulator(&self) -> bool {
        matches!(self.kind, EncoderKind::Accumulator { .. })
    }

    pub fn encode(&self, info: &[u8]) -> Result<Vec<u8>> {
        if info.len() != self.k() {
            return Err(Error::Encoding(format!("expected {} information bits, got {}", self.k(), info.len())));
        }
        let mut cw = vec![0u8; self.n];
        for (&c, &b) in self.info_cols.iter().zip(info) {
            cw[c] = b & 1;
        }
        match &self.kind {
            EncoderKind::Dense { rows } => {
                let words = self.n.div_ceil(64);
                let mut packed = vec![0u64; words];
                for &c in &self.info_cols {
                    if cw[c] == 1 {
                        packed[c / 64] |= 1 << (c % 64);
                    }
                }
                for (row, &pc) in rows.iter().zip(&self.parity_cols) {
                    let ones: u32 = row.iter().zip(&packed).map(|(a, b)| (a & b).count_ones()).sum();
                    cw[pc] = (ones & 1) as u8;
                }
            }
            EncoderKind::Accumulator { info_rows } => {
                let mut acc = 0u8;
                for (r, cols) in info_rows.iter().enumerate() {
                    let s = cols.iter().fold(0u8, |a, &c| a ^ cw[c]);
                    acc ^= s;
                    cw[self.parity_cols[r]] = acc;
                }
            }
        }
        Ok(cw)
    }

    /// Information bits of a codeword.
    pub fn extract(&self, codeword: &[u8]) -> Vec<u8> {
        self.info_cols.iter().map(|&c| codeword[c]).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BpOutcome {
    pub bits: Vec<u8>,
    pub iterations: usize,
    pub syndrome_ok: bool,
    /// A-posteriori LLRs.
    pub posterior: Vec<f64>,
}

/// Flooding sum-product decoder. LLRs are `ln P(0)/P(1)`. Decoding stops as
/// soon as the hard decisions satisfy every check; a zero posterior counts
/// as undecided and prevents success.
pub fn bp_decode(h: &ParityCheck, llrs: &[f64], max_iter: usize) -> Result<BpOutcome> {
    if llrs.len() != h.cols {
        return Err(Error::Decoding(format!("expected {} LLRs, got {}", h.cols, llrs.len())));
    }
    const CLAMP: f64 = 1.0 - 1e-15;
    // edge storage in row order; per-column edge indices
    let mut edge_var = Vec::with_capacity(h.edges());
    let mut row_start = Vec::with_capacity(h.rows + 1);
    for r in 0..h.rows {
        row_start.push(edge_var.len());
        edge_var.extend_from_slice(h.row(r));
    }
    row_start.push(edge_var.len());
    let mut col_edges: Vec<Vec<usize>> = vec![Vec::new(); h.cols];
    for (e, &v) in edge_var.iter().enumerate() {
        col_edges[v].push(e);
    }

    let mut v2c: Vec<f64> = edge_var.iter().map(|&v| llrs[v]).collect();
    let mut c2v = vec![0.0; edge_var.len()];
    let mut posterior = llrs.to_vec();
    let mut bits = vec![0u8; h.cols];
    let mut tanh_buf = Vec::new();
    let mut prefix = Vec::new();

    for it in 1..=max_iter {
        for r in 0..h.rows {
            let (s, e) = (row_start[r], row_start[r + 1]);
            tanh_buf.clear();
            tanh_buf.extend(v2c[s..e].iter().map(|l| (0.5 * l).tanh()));
            // exclusive products via prefix/suffix
            prefix.clear();
            let mut acc = 1.0;
            for t in &tanh_buf {
                prefix.push(acc);
                acc *= t;
            }
            let mut suffix = 1.0;
            for i in (0..tanh_buf.len()).rev() {
                let prod = (prefix[i] * suffix).clamp(-CLAMP, CLAMP);
                c2v[s + i] = 2.0 * prod.atanh();
                suffix *= tanh_buf[i];
            }
        }
        for v in 0..h.cols {
            let total = llrs[v] + col_edges[v].iter().map(|&e| c2v[e]).sum::<f64>();
            posterior[v] = total;
            for &e in &col_edges[v] {
                v2c[e] = total - c2v[e];
            }
            bits[v] = (total < 0.0) as u8;
        }
        if posterior.iter().all(|l| *l != 0.0) && h.is_codeword(&bits) {
            return Ok(BpOutcome { bits, iterations: it, syndrome_ok: true, posterior });
        }
    }
    Ok(BpOutcome { bits, iterations: max_iter, syndrome_ok: false, posterior })
}
