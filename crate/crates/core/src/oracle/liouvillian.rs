use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use faer::c64;
use faer::sparse::{SparseColMat, Triplet};
use libm::sqrt;

use super::{Emitter, TruncatedSpace};
use crate::error::{Error, Result};
use crate::params::SystemParams;

/// Real Hilbert-space operator as `(row, col, value)` entries.
type Operator = Vec<(usize, usize, f64)>;

fn annihilation(space: &TruncatedSpace) -> Operator {
    let mut op = Vec::new();
    for e in [Emitter::Ground, Emitter::Excited] {
        for n in 1..=space.n_max() {
            op.push((space.index(e, n - 1), space.index(e, n), sqrt(n as f64)));
        }
    }
    op
}

/// `σ = |g⟩⟨e|`.
fn lowering(space: &TruncatedSpace) -> Operator {
    (0..=space.n_max())
        .map(|n| (space.index(Emitter::Ground, n), space.index(Emitter::Excited, n), 1.0))
        .collect()
}

fn adjoint(op: &Operator) -> Operator {
    op.iter().map(|&(r, c, v)| (c, r, v)).collect()
}

fn product(a: &Operator, b: &Operator) -> Operator {
    let mut out: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for &(i, k, va) in a {
        for &(k2, j, vb) in b {
            if k == k2 {
                *out.entry((i, j)).or_insert(0.0) += va * vb;
            }
        }
    }
    out.into_iter().map(|((i, j), v)| (i, j, v)).collect()
}

/// Accumulates superoperator entries acting on column-stacked `vec(ρ)`,
/// where `ρ_ij` sits at `i + dim·j`.
struct SuperOp {
    dim: usize,
    entries: BTreeMap<(usize, usize), c64>,
}

impl SuperOp {
    fn add(&mut self, row: usize, col: usize, v: c64) {
        *self.entries.entry((col, row)).or_insert(c64::new(0.0, 0.0)) += v;
    }

    /// `ρ ↦ c·Aρ`.
    fn left(&mut self, a: &Operator, c: c64) {
        for j in 0..self.dim {
            for &(r, k, v) in a {
                self.add(r + self.dim * j, k + self.dim * j, c * v);
            }
        }
    }

    /// `ρ ↦ c·ρB`.
    fn right(&mut self, b: &Operator, c: c64) {
        for i in 0..self.dim {
            for &(k, j, v) in b {
                self.add(i + self.dim * j, i + self.dim * k, c * v);
            }
        }
    }

    /// `ρ ↦ c·AρB`.
    fn sandwich(&mut self, a: &Operator, b: &Operator, c: c64) {
        for &(i, k, va) in a {
            for &(l, j, vb) in b {
                self.add(i + self.dim * j, k + self.dim * l, c * (va * vb));
            }
        }
    }

    /// `rate/2 · (2cρc† − c†cρ − ρc†c)`.
    fn dissipator(&mut self, op: &Operator, rate: f64) {
        if rate == 0.0 {
            return;
        }
        let dag = adjoint(op);
        let number = product(&dag, op);
        self.sandwich(op, &dag, c64::new(rate, 0.0));
        self.left(&number, c64::new(-rate / 2.0, 0.0));
        self.right(&number, c64::new(-rate / 2.0, 0.0));
    }
}

/// Liouvillian of the pumped Jaynes–Cummings model on a truncated space,
/// acting on column-stacked density matrices.
#[derive(Debug, Clone)]
pub struct Liouvillian {
    matrix: SparseColMat<usize, c64>,
    space: TruncatedSpace,
    params: SystemParams,
}

impl Liouvillian {
    pub fn matrix(&self) -> &SparseColMat<usize, c64> {
        &self.matrix
    }

    pub fn space(&self) -> TruncatedSpace {
        self.space
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    /// Side length `dim²` of the superoperator.
    pub fn size(&self) -> usize {
        self.space.dim() * self.space.dim()
    }

    /// Nonzero entries as `(row, col, value)`, column by column.
    pub fn triplets(&self) -> Vec<(usize, usize, c64)> {
        let m = self.matrix.as_ref();
        let mut out = Vec::with_capacity(m.compute_nnz());
        for col in 0..m.ncols() {
            for (row, v) in m.row_idx_of_col(col).zip(m.val_of_col(col)) {
                out.push((row, col, *v));
            }
        }
        out
    }

    /// `L·vec(ρ)` for a column-stacked density matrix.
    pub fn apply(&self, vec_rho: &[c64]) -> Vec<c64> {
        let m = self.matrix.as_ref();
        let mut out = alloc::vec![c64::new(0.0, 0.0); m.nrows()];
        for col in 0..m.ncols() {
            let x = vec_rho[col];
            for (row, v) in m.row_idx_of_col(col).zip(m.val_of_col(col)) {
                out[row] += *v * x;
            }
        }
        out
    }
}

/// `∂_t ρ = −i[H, ρ] + (γ_a/2)L_a ρ + (γ_σ/2)L_σ ρ + (P_σ/2)L_σ† ρ` with
/// `H = g(σ†a + a†σ)` and `L_c ρ = 2cρc† − c†cρ − ρc†c`.
pub fn build_liouvillian(p: &SystemParams, space: TruncatedSpace) -> Result<Liouvillian> {
    p.validate()?;
    if space.n_max() == 0 {
        return Err(Error::EmptyLadder(0));
    }
    let dim = space.dim();
    let a = annihilation(&space);
    let sigma = lowering(&space);
    let sigma_dag = adjoint(&sigma);

    let mut op = SuperOp { dim, entries: BTreeMap::new() };
    if p.g != 0.0 {
        let mut h = product(&sigma_dag, &a);
        h.extend(product(&adjoint(&a), &sigma));
        let h: Operator = h.into_iter().map(|(r, c, v)| (r, c, p.g * v)).collect();
        op.left(&h, c64::new(0.0, -1.0));
        op.right(&h, c64::new(0.0, 1.0));
    }
    op.dissipator(&a, p.gamma_a);
    op.dissipator(&sigma, p.gamma_sigma);
    op.dissipator(&sigma_dag, p.pump);

    let triplets: Vec<_> = op
        .entries
        .into_iter()
        .filter(|(_, v)| *v != c64::new(0.0, 0.0))
        .map(|((col, row), v)| Triplet::new(row, col, v))
        .collect();
    let matrix = SparseColMat::try_new_from_triplets(dim * dim, dim * dim, &triplets)
        .map_err(|e| Error::Singular(format!("could not assemble Liouvillian: {e:?}")))?;
    Ok(Liouvillian { matrix, space, params: *p })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::modulus;

    fn space(n_max: usize) -> TruncatedSpace {
        TruncatedSpace::new(n_max).unwrap()
    }

    #[test]
    fn smallest_ladder_is_sixteen_by_sixteen() {
        let p = SystemParams::new(1.0, 0.1, 0.1, 0.1).unwrap();
        let l = build_liouvillian(&p, space(1)).unwrap();
        assert_eq!(l.matrix().nrows(), 16);
        assert_eq!(l.matrix().ncols(), 16);
    }

    #[test]
    fn vacuum_is_stationary_without_drive() {
        let p = SystemParams::new(0.0, 0.3, 0.2, 0.0).unwrap();
        let s = space(4);
        let l = build_liouvillian(&p, s).unwrap();
        let mut rho = alloc::vec![c64::new(0.0, 0.0); l.size()];
        let vac = s.index(Emitter::Ground, 0);
        rho[vac + s.dim() * vac] = c64::new(1.0, 0.0);
        assert!(l.apply(&rho).iter().all(|v| modulus(*v) == 0.0));
    }

    #[test]
    fn trace_preserving() {
        let p = SystemParams::new(1.0, 0.05, 0.02, 0.3).unwrap();
        let s = space(5);
        let l = build_liouvillian(&p, s).unwrap();
        let dim = s.dim();
        let mut column_trace = alloc::vec![c64::new(0.0, 0.0); l.size()];
        for (row, col, v) in l.triplets() {
            if row % dim == row / dim {
                column_trace[col] += v;
            }
        }
        assert!(column_trace.iter().all(|v| modulus(*v) < 1e-12));
    }

    #[test]
    fn sparsity_grows_with_dim_squared() {
        let p = SystemParams::new(1.0, 0.05, 0.02, 0.3).unwrap();
        for n_max in [4, 8, 16] {
            let l = build_liouvillian(&p, space(n_max)).unwrap();
            let per_entry = l.triplets().len() as f64 / l.size() as f64;
            assert!(per_entry < 12.0, "n_max = {n_max}: {per_entry} nonzeros per row");
        }
    }
}
