//! Pure and mixed states over the same `[qubits…, resonator]` dims convention
//! as [`crate::operator::QOperator`].

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::operator::QOperator;

#[derive(Clone, Debug)]
enum StateData {
    Pure(Array1<C64>),
    Density(Array2<C64>),
}

#[derive(Clone, Debug)]
pub struct QState {
    data: StateData,
    dims: Vec<usize>,
}

impl QState {
    /// Pure state from an amplitude vector; must be normalized to 1e-6.
    pub fn pure(vec: Array1<C64>, dims: Vec<usize>) -> Result<Self> {
        let n: usize = dims.iter().product();
        if vec.len() != n {
            return Err(Error::DimensionMismatch {
                context: "state vector length vs product of dims",
                expected: n,
                actual: vec.len(),
            });
        }
        let norm: f64 = vec.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidArgument(format!(
                "state vector norm {norm} is not 1"
            )));
        }
        Ok(Self {
            data: StateData::Pure(vec),
            dims,
        })
    }

    /// Density matrix; must be Hermitian with unit trace (1e-6).
    pub fn density(mat: Array2<C64>, dims: Vec<usize>) -> Result<Self> {
        let op = QOperator::new(mat, dims.clone())?;
        if op.hermiticity_defect() > 1e-8 * op.max_abs().max(1.0) {
            return Err(Error::InvalidArgument(
                "density matrix is not Hermitian".into(),
            ));
        }
        let tr = op.trace();
        if (tr.re - 1.0).abs() > 1e-6 || tr.im.abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "density matrix trace {} is not 1",
                tr.re
            )));
        }
        Ok(Self {
            data: StateData::Density(op.into_matrix()),
            dims,
        })
    }

    /// Computational basis state |indices⟩.
    pub fn basis(dims: &[usize], indices: &[usize]) -> Result<Self> {
        if indices.len() != dims.len() {
            return Err(Error::DimensionMismatch {
                context: "basis index count vs subsystem count",
                expected: dims.len(),
                actual: indices.len(),
            });
        }
        let mut flat = 0usize;
        for (d, &i) in dims.iter().zip(indices) {
            if i >= *d {
                return Err(Error::InvalidArgument(format!(
                    "basis index {i} out of range for dimension {d}"
                )));
            }
            flat = flat * d + i;
        }
        let n: usize = dims.iter().product();
        let mut v = Array1::zeros(n);
        v[flat] = C64::new(1.0, 0.0);
        Ok(Self {
            data: StateData::Pure(v),
            dims: dims.to_vec(),
        })
    }

    /// All subsystems in their ground/vacuum level.
    pub fn vacuum(dims: &[usize]) -> Self {
        Self::basis(dims, &vec![0; dims.len()]).expect("vacuum always valid")
    }

    /// Normalized single-qubit state c0|0⟩ + c1|1⟩.
    pub fn qubit(c0: C64, c1: C64) -> Self {
        let norm = (c0.norm_sqr() + c1.norm_sqr()).sqrt();
        let v = ndarray::array![c0 / norm, c1 / norm];
        Self {
            data: StateData::Pure(v),
            dims: vec![2],
        }
    }

    /// Thermal resonator state with mean occupation `nbar`, renormalized over
    /// the truncated tower.
    pub fn thermal(n_cut: usize, nbar: f64) -> Result<Self> {
        if nbar < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "thermal occupation must be >= 0, got {nbar}"
            )));
        }
        if nbar == 0.0 {
            return Ok(Self::vacuum(&[n_cut]));
        }
        let r = nbar / (1.0 + nbar);
        let weights: Vec<f64> = (0..n_cut).map(|n| r.powi(n as i32)).collect();
        let z: f64 = weights.iter().sum();
        let mut rho = Array2::zeros((n_cut, n_cut));
        for (n, w) in weights.iter().enumerate() {
            rho[[n, n]] = C64::new(w / z, 0.0);
        }
        Ok(Self {
            data: StateData::Density(rho),
            dims: vec![n_cut],
        })
    }

    /// Tensor product of two states (pure ⊗ pure stays pure).
    pub fn product(a: &QState, b: &QState) -> QState {
        let mut dims = a.dims.clone();
        dims.extend_from_slice(&b.dims);
        match (&a.data, &b.data) {
            (StateData::Pure(u), StateData::Pure(v)) => {
                let mut w = Array1::zeros(u.len() * v.len());
                for (i, x) in u.iter().enumerate() {
                    for (j, y) in v.iter().enumerate() {
                        w[i * v.len() + j] = x * y;
                    }
                }
                QState {
                    data: StateData::Pure(w),
                    dims,
                }
            }
            _ => {
                let ra = a.density_matrix();
                let rb = b.density_matrix();
                QState {
                    data: StateData::Density(crate::operator::kron(&ra, &rb)),
                    dims,
                }
            }
        }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn is_pure_form(&self) -> bool {
        matches!(self.data, StateData::Pure(_))
    }

    /// Amplitude vector, if stored in pure form.
    pub fn vector(&self) -> Option<&Array1<C64>> {
        match &self.data {
            StateData::Pure(v) => Some(v),
            StateData::Density(_) => None,
        }
    }

    /// Density matrix (outer product for pure states).
    pub fn density_matrix(&self) -> Array2<C64> {
        match &self.data {
            StateData::Pure(v) => {
                let n = v.len();
                let mut rho = Array2::zeros((n, n));
                for i in 0..n {
                    for j in 0..n {
                        rho[[i, j]] = v[i] * v[j].conj();
                    }
                }
                rho
            }
            StateData::Density(m) => m.clone(),
        }
    }

    /// Tr ρ² — 1 for pure states, 1/d for maximally mixed.
    pub fn purity(&self) -> f64 {
        match &self.data {
            StateData::Pure(_) => 1.0,
            StateData::Density(m) => {
                let sq = m.dot(m);
                sq.diag().sum().re
            }
        }
    }

    /// U|ψ⟩ or U ρ U†.
    pub fn apply(&self, op: &QOperator) -> QState {
        assert_eq!(op.dims(), self.dims.as_slice(), "apply needs matching dims");
        match &self.data {
            StateData::Pure(v) => QState {
                data: StateData::Pure(op.matrix().dot(v)),
                dims: self.dims.clone(),
            },
            StateData::Density(m) => {
                let u = op.matrix();
                let uh = u.t().mapv(|z| z.conj());
                QState {
                    data: StateData::Density(u.dot(m).dot(&uh)),
                    dims: self.dims.clone(),
                }
            }
        }
    }

    pub fn expectation(&self, op: &QOperator) -> C64 {
        assert_eq!(op.dims(), self.dims.as_slice());
        match &self.data {
            StateData::Pure(v) => {
                let av = op.matrix().dot(v);
                v.iter().zip(av.iter()).map(|(x, y)| x.conj() * y).sum()
            }
            StateData::Density(m) => op.matrix().dot(m).diag().sum(),
        }
    }

    /// Reduced density matrix over the subsystems listed in `keep`
    /// (ascending order of axis index preserved).
    pub fn partial_trace(&self, keep: &[usize]) -> Result<QState> {
        let k = self.dims.len();
        let mut sorted = keep.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != keep.len() || sorted.iter().any(|&a| a >= k) {
            return Err(Error::InvalidArgument(format!(
                "partial_trace keep list {keep:?} invalid for {k} subsystems"
            )));
        }
        if sorted.len() == k {
            return Ok(QState {
                data: StateData::Density(self.density_matrix()),
                dims: self.dims.clone(),
            });
        }
        let keep_dims: Vec<usize> = sorted.iter().map(|&a| self.dims[a]).collect();
        let traced: Vec<usize> = (0..k).filter(|a| !sorted.contains(a)).collect();
        let traced_dims: Vec<usize> = traced.iter().map(|&a| self.dims[a]).collect();
        let nk: usize = keep_dims.iter().product();
        let nt: usize = traced_dims.iter().product();

        // flat index for (keep multi-index, traced multi-index)
        let strides: Vec<usize> = {
            let mut s = vec![1usize; k];
            for a in (0..k - 1).rev() {
                s[a] = s[a + 1] * self.dims[a + 1];
            }
            s
        };
        let decode = |flat: usize, dims: &[usize]| -> Vec<usize> {
            let mut rest = flat;
            let mut idx = vec![0usize; dims.len()];
            for a in (0..dims.len()).rev() {
                idx[a] = rest % dims[a];
                rest /= dims[a];
            }
            idx
        };
        let flat_of = |ki: &[usize], ti: &[usize]| -> usize {
            let mut f = 0usize;
            for (pos, &axis) in sorted.iter().enumerate() {
                f += ki[pos] * strides[axis];
            }
            for (pos, &axis) in traced.iter().enumerate() {
                f += ti[pos] * strides[axis];
            }
            f
        };

        let rho = self.density_matrix();
        let mut out = Array2::zeros((nk, nk));
        for i in 0..nk {
            let ki = decode(i, &keep_dims);
            for j in 0..nk {
                let kj = decode(j, &keep_dims);
                let mut acc = C64::new(0.0, 0.0);
                for t in 0..nt {
                    let ti = decode(t, &traced_dims);
                    acc += rho[[flat_of(&ki, &ti), flat_of(&kj, &ti)]];
                }
                out[[i, j]] = acc;
            }
        }
        Ok(QState {
            data: StateData::Density(out),
            dims: keep_dims,
        })
    }
}
