use super::matrix::{CMatrix, CVector, C64, ONE, ZERO};
use super::NumlinError;

/// Orthonormal frame of the tangent space `T_v = v⊥`, realised by a single
/// Householder reflector `H = I − τ·u·uᴴ` with `H·(v/‖v‖) = β·e₁`, `|β| = 1`.
///
/// `H` is Hermitian and unitary, so its first column spans `v` and columns
/// `2..n` form the tangent basis `B`. Nothing is ever materialised beyond `u`,
/// which makes projections and compressions `O(n²)`.
#[derive(Clone, Debug)]
pub struct TangentFrame {
    u: CVector,
    tau: f64,
    unit_v: CVector,
}

impl TangentFrame {
    pub fn new(v: &CVector) -> Result<Self, NumlinError> {
        if v.is_empty() {
            return Err(NumlinError::Empty);
        }
        let x = v.normalized()?;
        // β = −phase(x₁); phase(0) is taken as 1.
        let x1 = x[0];
        let phase = if x1.norm() > 0.0 { x1 / x1.norm() } else { ONE };
        let beta = -phase;
        let mut u = x.clone();
        u[0] -= beta;
        let unorm2 = u.norm_sqr();
        Ok(TangentFrame {
            u,
            tau: 2.0 / unorm2,
            unit_v: x,
        })
    }

    pub fn dim(&self) -> usize {
        self.u.len()
    }

    /// The unit representative `v/‖v‖` the frame was built from.
    pub fn unit_v(&self) -> &CVector {
        &self.unit_v
    }

    /// `H·y`.
    pub fn reflect(&self, y: &CVector) -> CVector {
        let s = y.dot(&self.u) * self.tau; // τ·(uᴴy)
        let mut out = y.clone();
        for (o, ui) in out.as_mut_slice().iter_mut().zip(self.u.iter()) {
            *o -= ui * s;
        }
        out
    }

    /// The `n × (n−1)` matrix `B` whose columns are `H·e₂, …, H·eₙ`.
    pub fn basis(&self) -> CMatrix {
        let n = self.dim();
        CMatrix::from_fn(n, n - 1, |i, j| {
            let col = j + 1;
            let delta = if i == col { ONE } else { ZERO };
            delta - self.u[i] * self.u[col].conj() * self.tau
        })
    }

    /// Maps tangent coordinates `y ∈ ℂⁿ⁻¹` to the ambient vector `B·y`.
    pub fn to_ambient(&self, coords: &[C64]) -> CVector {
        let n = self.dim();
        debug_assert_eq!(coords.len(), n - 1);
        let mut padded = Vec::with_capacity(n);
        padded.push(ZERO);
        padded.extend_from_slice(coords);
        self.reflect(&CVector::new(padded))
    }

    /// Coordinates `Bᴴ·z` of the projection of `z` onto `T_v`.
    pub fn to_coords(&self, z: &CVector) -> Vec<C64> {
        let hz = self.reflect(z);
        hz.as_slice()[1..].to_vec()
    }

    /// `Bᴴ·(A − shift·I)·B` computed as the trailing block of `H·(A − shift·I)·H`.
    pub fn compress(&self, a: &CMatrix, shift: C64) -> CMatrix {
        let n = self.dim();
        assert!(a.is_square() && a.n() == n, "compress: dimension mismatch");
        let u = self.u.as_slice();
        let tau = self.tau;

        let mut x = a.shifted(shift);
        let xs = x.as_mut_slice();
        // Left: X ← X − τ·u·(uᴴX).
        let mut r = vec![ZERO; n];
        for (i, ui) in u.iter().enumerate() {
            let cu = ui.conj();
            if cu == ZERO {
                continue;
            }
            for (rj, xij) in r.iter_mut().zip(&xs[i * n..(i + 1) * n]) {
                *rj += cu * xij;
            }
        }
        for (i, ui) in u.iter().enumerate() {
            let s = ui * tau;
            for (xij, rj) in xs[i * n..(i + 1) * n].iter_mut().zip(&r) {
                *xij -= s * rj;
            }
        }
        // Right: X ← X − τ·(X·u)·uᴴ, restricted to the trailing block.
        let mut out = Vec::with_capacity((n - 1) * (n - 1));
        for i in 1..n {
            let row = &xs[i * n..(i + 1) * n];
            let c: C64 = row.iter().zip(u).fold(ZERO, |acc, (xij, uj)| acc + xij * uj) * tau;
            out.extend(row[1..].iter().zip(&u[1..]).map(|(xij, uj)| xij - c * uj.conj()));
        }
        CMatrix::from_row_major(n - 1, n - 1, out).expect("square block")
    }
}

/// Orthonormal basis of `T_v`, as an `n × (n−1)` matrix.
pub fn tangent_basis(v: &CVector) -> Result<CMatrix, NumlinError> {
    Ok(TangentFrame::new(v)?.basis())
}
