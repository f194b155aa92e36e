//! Sparse symmetric LDLᵀ with static 1×1 and 2×2 pivot blocks.
//!
//! Every pivot block is stored as a dense 2×2 array in row-major order. A
//! 1×1 block is padded with a unit second diagonal entry and zero
//! off-diagonals, which keeps the padding inert through the whole
//! factorization. The elimination order is a minimum-degree order on the
//! block graph; the numeric phase is an up-looking factorization driven by
//! the elimination tree.

use crate::ordering::minimum_degree;

pub(crate) type Block = [f64; 4];

const NONE: usize = usize::MAX;
const ZERO: Block = [0.0; 4];

#[inline]
fn mul(a: &Block, b: &Block) -> Block {
    [
        a[0] * b[0] + a[1] * b[2],
        a[0] * b[1] + a[1] * b[3],
        a[2] * b[0] + a[3] * b[2],
        a[2] * b[1] + a[3] * b[3],
    ]
}

/// aᵀ · b
#[inline]
fn mul_tn(a: &Block, b: &Block) -> Block {
    [
        a[0] * b[0] + a[2] * b[2],
        a[0] * b[1] + a[2] * b[3],
        a[1] * b[0] + a[3] * b[2],
        a[1] * b[1] + a[3] * b[3],
    ]
}

#[inline]
fn sub_assign(a: &mut Block, b: &Block) {
    for (x, y) in a.iter_mut().zip(b) {
        *x -= y;
    }
}

/// Counts of positive, negative and zero eigenvalues of the factored matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Inertia {
    pub positive: usize,
    pub negative: usize,
    pub zero: usize,
}

/// One pivot block: a single scalar index or a pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pivot {
    Single(usize),
    Pair(usize, usize),
}

impl Pivot {
    fn size(self) -> usize {
        match self {
            Pivot::Single(_) => 1,
            Pivot::Pair(..) => 2,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Slot {
    diag: bool,
    target: usize,
    idx: u8,
    mirror: Option<u8>,
}

/// Symbolic analysis plus storage for repeated numeric factorizations of
/// matrices sharing one sparsity pattern.
#[derive(Debug, Clone)]
pub struct BlockLdl {
    n: usize,
    nb: usize,
    // scalar index -> (position, sub index)
    place: Vec<(usize, u8)>,
    size: Vec<u8>,
    slots: Vec<Slot>,
    a_colptr: Vec<usize>,
    a_rowidx: Vec<usize>,
    a_vals: Vec<Block>,
    a_diag: Vec<Block>,
    etree: Vec<usize>,
    l_colptr: Vec<usize>,
    l_rowidx: Vec<usize>,
    l_vals: Vec<Block>,
    d: Vec<Block>,
    dinv: Vec<Block>,
    factored: bool,
}

impl BlockLdl {
    /// Analyzes the lower-triangular pattern `(row, col)` of an `n × n`
    /// symmetric matrix. `pivots` must cover every scalar index exactly
    /// once. Blocks flagged in `late` are eliminated after all others.
    pub fn analyze(n: usize, pattern: &[(usize, usize)], pivots: &[Pivot], late: &[bool]) -> Self {
        assert_eq!(pivots.len(), late.len());
        let nb = pivots.len();
        let mut block_of = vec![(NONE, 0u8); n];
        for (b, p) in pivots.iter().enumerate() {
            match *p {
                Pivot::Single(i) => block_of[i] = (b, 0),
                Pivot::Pair(i, j) => {
                    block_of[i] = (b, 0);
                    block_of[j] = (b, 1);
                }
            }
        }
        assert!(block_of.iter().all(|&(b, _)| b != NONE), "pivots must cover every index");

        let edges: Vec<(usize, usize)> = pattern
            .iter()
            .map(|&(r, c)| (block_of[r].0, block_of[c].0))
            .filter(|(a, b)| a != b)
            .collect();
        let weight: Vec<usize> = pivots.iter().map(|p| p.size()).collect();
        let perm = minimum_degree(nb, &edges, &weight, late);
        let mut pos = vec![0; nb];
        for (k, &b) in perm.iter().enumerate() {
            pos[b] = k;
        }
        let size: Vec<u8> = perm.iter().map(|&b| pivots[b].size() as u8).collect();
        let place: Vec<(usize, u8)> = block_of.iter().map(|&(b, s)| (pos[b], s)).collect();

        // Upper block pattern (row < col), one slot per input entry.
        let mut entries: Vec<(usize, usize, usize)> = Vec::new();
        let mut slots = vec![
            Slot {
                diag: true,
                target: 0,
                idx: 0,
                mirror: None
            };
            pattern.len()
        ];
        for (t, &(r, c)) in pattern.iter().enumerate() {
            let (pr, sr) = place[r];
            let (pc, sc) = place[c];
            if pr == pc {
                let idx = 2 * sr + sc;
                let mirror = if sr != sc { Some(2 * sc + sr) } else { None };
                slots[t] = Slot {
                    diag: true,
                    target: pr,
                    idx,
                    mirror,
                };
            } else {
                let (row, col, sub_row, sub_col) = if pr < pc { (pr, pc, sr, sc) } else { (pc, pr, sc, sr) };
                entries.push((col, row, t));
                slots[t] = Slot {
                    diag: false,
                    target: NONE,
                    idx: 2 * sub_row + sub_col,
                    mirror: None,
                };
                let _ = row;
            }
        }
        entries.sort_unstable();
        let mut a_colptr = vec![0usize; nb + 1];
        let mut a_rowidx = Vec::new();
        let mut last = (NONE, NONE);
        for &(col, row, t) in &entries {
            if (col, row) != last {
                a_rowidx.push(row);
                a_colptr[col + 1] += 1;
                last = (col, row);
            }
            slots[t].target = a_rowidx.len() - 1;
        }
        for j in 0..nb {
            a_colptr[j + 1] += a_colptr[j];
        }

        // Elimination tree and column counts of L.
        let mut etree = vec![NONE; nb];
        let mut lnz = vec![0usize; nb];
        let mut flag = vec![NONE; nb];
        for j in 0..nb {
            flag[j] = j;
            for &row in &a_rowidx[a_colptr[j]..a_colptr[j + 1]] {
                let mut i = row;
                while flag[i] != j {
                    if etree[i] == NONE {
                        etree[i] = j;
                    }
                    lnz[i] += 1;
                    flag[i] = j;
                    i = etree[i];
                }
            }
        }
        let mut l_colptr = vec![0usize; nb + 1];
        for i in 0..nb {
            l_colptr[i + 1] = l_colptr[i] + lnz[i];
        }
        let nnz_l = l_colptr[nb];

        Self {
            n,
            nb,
            place,
            size,
            slots,
            a_vals: vec![ZERO; a_rowidx.len()],
            a_colptr,
            a_rowidx,
            a_diag: vec![ZERO; nb],
            etree,
            l_colptr,
            l_rowidx: vec![0; nnz_l],
            l_vals: vec![ZERO; nnz_l],
            d: vec![ZERO; nb],
            dinv: vec![ZERO; nb],
            factored: false,
        }
    }

    /// Scalar dimension.
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of stored block entries in L.
    pub fn factor_nnz(&self) -> usize {
        self.l_vals.len()
    }

    /// Factors the matrix whose lower-triangular entries are `values`,
    /// aligned with the pattern given to [`BlockLdl::analyze`]. Duplicate
    /// entries are summed. Returns the inertia; a nonzero `zero` count means
    /// the factorization is unusable.
    pub fn factor(&mut self, values: &[f64]) -> Inertia {
        assert_eq!(values.len(), self.slots.len());
        self.a_vals.iter_mut().for_each(|b| *b = ZERO);
        for (k, blk) in self.a_diag.iter_mut().enumerate() {
            *blk = ZERO;
            if self.size[k] == 1 {
                blk[3] = 1.0;
            }
        }
        for (slot, &v) in self.slots.iter().zip(values) {
            let blk = if slot.diag {
                &mut self.a_diag[slot.target]
            } else {
                &mut self.a_vals[slot.target]
            };
            blk[slot.idx as usize] += v;
            if let Some(m) = slot.mirror {
                blk[m as usize] += v;
            }
        }

        let nb = self.nb;
        let mut inertia = Inertia::default();
        let mut y_vals = vec![ZERO; nb];
        let mut y_mark = vec![false; nb];
        let mut y_idx: Vec<usize> = Vec::with_capacity(nb);
        let mut elim: Vec<usize> = Vec::with_capacity(nb);
        let mut l_next: Vec<usize> = self.l_colptr[..nb].to_vec();

        for k in 0..nb {
            y_idx.clear();
            let mut dk = self.a_diag[k];
            for p in self.a_colptr[k]..self.a_colptr[k + 1] {
                let b = self.a_rowidx[p];
                y_vals[b] = self.a_vals[p];
                if !y_mark[b] {
                    y_mark[b] = true;
                    elim.clear();
                    elim.push(b);
                    let mut next = self.etree[b];
                    while next != NONE && next < k {
                        if y_mark[next] {
                            break;
                        }
                        y_mark[next] = true;
                        elim.push(next);
                        next = self.etree[next];
                    }
                    while let Some(e) = elim.pop() {
                        y_idx.push(e);
                    }
                }
            }
            for &c in y_idx.iter().rev() {
                let yc = y_vals[c];
                for j in self.l_colptr[c]..l_next[c] {
                    let upd = mul(&self.l_vals[j], &yc);
                    sub_assign(&mut y_vals[self.l_rowidx[j]], &upd);
                }
                let lkc = mul_tn(&yc, &self.dinv[c]);
                let slot = l_next[c];
                self.l_rowidx[slot] = k;
                self.l_vals[slot] = lkc;
                l_next[c] += 1;
                sub_assign(&mut dk, &mul(&lkc, &yc));
                y_vals[c] = ZERO;
                y_mark[c] = false;
            }
            self.d[k] = dk;
            match invert_pivot(&dk, self.size[k]) {
                Some((inv, pos, neg)) => {
                    self.dinv[k] = inv;
                    inertia.positive += pos;
                    inertia.negative += neg;
                }
                None => {
                    self.dinv[k] = ZERO;
                    inertia.zero += self.size[k] as usize;
                }
            }
        }
        self.factored = inertia.zero == 0;
        inertia
    }

    /// Solves `A x = rhs` in place using the last successful factorization.
    pub fn solve(&self, rhs: &mut [f64]) {
        assert!(self.factored, "solve called without a valid factorization");
        assert_eq!(rhs.len(), self.n);
        let nb = self.nb;
        let mut b = vec![[0.0f64; 2]; nb];
        for (i, &(p, s)) in self.place.iter().enumerate() {
            b[p][s as usize] = rhs[i];
        }
        for i in 0..nb {
            let bi = b[i];
            for j in self.l_colptr[i]..self.l_colptr[i + 1] {
                let l = &self.l_vals[j];
                let r = &mut b[self.l_rowidx[j]];
                r[0] -= l[0] * bi[0] + l[1] * bi[1];
                r[1] -= l[2] * bi[0] + l[3] * bi[1];
            }
        }
        for i in 0..nb {
            let di = &self.dinv[i];
            let bi = b[i];
            b[i] = [di[0] * bi[0] + di[1] * bi[1], di[2] * bi[0] + di[3] * bi[1]];
        }
        for i in (0..nb).rev() {
            let mut bi = b[i];
            for j in self.l_colptr[i]..self.l_colptr[i + 1] {
                let l = &self.l_vals[j];
                let r = b[self.l_rowidx[j]];
                bi[0] -= l[0] * r[0] + l[2] * r[1];
                bi[1] -= l[1] * r[0] + l[3] * r[1];
            }
            b[i] = bi;
        }
        for (i, &(p, s)) in self.place.iter().enumerate() {
            rhs[i] = b[p][s as usize];
        }
    }
}

const PIVOT_TOL: f64 = 1e-20;

fn invert_pivot(d: &Block, size: u8) -> Option<(Block, usize, usize)> {
    if size == 1 {
        let a = d[0];
        if !a.is_finite() || a.abs() <= PIVOT_TOL {
            return None;
        }
        let inv = [1.0 / a, 0.0, 0.0, 1.0];
        return Some(if a > 0.0 { (inv, 1, 0) } else { (inv, 0, 1) });
    }
    let (a, b, c) = (d[0], 0.5 * (d[1] + d[2]), d[3]);
    let det = a * c - b * b;
    let scale = (a * c).abs() + b * b;
    if !det.is_finite() || det == 0.0 || det.abs() <= 1e-14 * scale {
        return None;
    }
    let inv = [c / det, -b / det, -b / det, a / det];
    let (pos, neg) = if det < 0.0 {
        (1, 1)
    } else if a + c > 0.0 {
        (2, 0)
    } else {
        (0, 2)
    };
    Some((inv, pos, neg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn dense_mul(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
        a.iter().map(|row| row.iter().zip(x).map(|(p, q)| p * q).sum()).collect()
    }

    fn lower_pattern(a: &[Vec<f64>]) -> (Vec<(usize, usize)>, Vec<f64>) {
        let mut pat = Vec::new();
        let mut vals = Vec::new();
        for (i, row) in a.iter().enumerate() {
            for (j, &v) in row.iter().enumerate().take(i + 1) {
                if v != 0.0 || i == j {
                    pat.push((i, j));
                    vals.push(v);
                }
            }
        }
        (pat, vals)
    }

    #[test]
    fn diagonal_matrix() {
        let a = vec![vec![2.0, 0.0, 0.0], vec![0.0, -3.0, 0.0], vec![0.0, 0.0, 5.0]];
        let (pat, vals) = lower_pattern(&a);
        let pivots = [Pivot::Single(0), Pivot::Single(1), Pivot::Single(2)];
        let mut ldl = BlockLdl::analyze(3, &pat, &pivots, &[false; 3]);
        let inertia = ldl.factor(&vals);
        assert_eq!(inertia, Inertia { positive: 2, negative: 1, zero: 0 });
        let mut x = vec![2.0, 3.0, 5.0];
        ldl.solve(&mut x);
        assert_relative_eq!(x[0], 1.0);
        assert_relative_eq!(x[1], -1.0);
        assert_relative_eq!(x[2], 1.0);
    }

    #[test]
    fn saddle_point_needs_pair_pivot() {
        // [[0, 1], [1, 0]] has no usable 1x1 pivot.
        let a = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        let (pat, vals) = lower_pattern(&a);
        let mut ldl = BlockLdl::analyze(2, &pat, &[Pivot::Pair(0, 1)], &[false]);
        let inertia = ldl.factor(&vals);
        assert_eq!(inertia, Inertia { positive: 1, negative: 1, zero: 0 });
        let mut x = vec![3.0, 4.0];
        ldl.solve(&mut x);
        assert_relative_eq!(x[0], 4.0);
        assert_relative_eq!(x[1], 3.0);
    }

    #[test]
    fn singular_pivot_is_reported() {
        let a = vec![vec![1.0, 1.0], vec![1.0, 1.0]];
        let (pat, vals) = lower_pattern(&a);
        let mut ldl = BlockLdl::analyze(2, &pat, &[Pivot::Single(0), Pivot::Single(1)], &[false; 2]);
        assert!(ldl.factor(&vals).zero > 0);
    }

    #[test]
    fn kkt_system_matches_dense_product() {
        // H = diag(4, 3, 2), J = [1 1 0; 0 1 1]
        let a = vec![
            vec![4.0, 0.0, 0.0, 1.0, 0.0],
            vec![0.0, 3.0, 0.0, 1.0, 1.0],
            vec![0.0, 0.0, 2.0, 0.0, 1.0],
            vec![1.0, 1.0, 0.0, 0.0, 0.0],
            vec![0.0, 1.0, 1.0, 0.0, 0.0],
        ];
        let (pat, vals) = lower_pattern(&a);
        let pivots = [Pivot::Pair(0, 3), Pivot::Pair(2, 4), Pivot::Single(1)];
        let mut ldl = BlockLdl::analyze(5, &pat, &pivots, &[false, false, true]);
        let inertia = ldl.factor(&vals);
        assert_eq!(inertia, Inertia { positive: 3, negative: 2, zero: 0 });
        let x_true = vec![1.0, -2.0, 0.5, 3.0, -1.0];
        let mut x = dense_mul(&a, &x_true);
        ldl.solve(&mut x);
        for (u, v) in x.iter().zip(&x_true) {
            assert_relative_eq!(u, v, epsilon = 1e-12);
        }
    }
}
