//! Dense N-way complex tensors.
//!
//! Linearization is column-major over modes with mode 0 fastest, so an
//! order-2 tensor shares its layout with `Matrix` and `vec` of a matrix is
//! the same buffer. Unfoldings follow the convention in which a rank-R
//! tensor with factors `{U_0, .., U_{N-1}}` satisfies
//! `unfold(T, n) = U_n * (U_{N-1} krp .. krp U_{n+1} krp U_{n-1} krp .. krp U_0)^T`,
//! i.e. the columns of the unfolding enumerate the remaining modes with the
//! lowest mode fastest.

use super::matrix::{khatri_rao, C64, Matrix};

/// Dense complex tensor with explicit shape.
#[derive(Clone, PartialEq, Debug)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<C64>,
}

impl Tensor {
    pub fn zeros(shape: &[usize]) -> Self {
        assert!(!shape.is_empty(), "tensor order must be at least 1");
        assert!(shape.iter().all(|&e| e > 0), "extents must be positive");
        let total: usize = shape.iter().product();
        Tensor {
            shape: shape.to_vec(),
            data: vec![C64::new(0.0, 0.0); total],
        }
    }

    /// Wraps a column-major buffer (mode 0 fastest).
    pub fn from_data(shape: &[usize], data: Vec<C64>) -> Self {
        let total: usize = shape.iter().product();
        assert_eq!(data.len(), total, "buffer length does not match shape");
        assert!(!shape.is_empty() && shape.iter().all(|&e| e > 0));
        Tensor {
            shape: shape.to_vec(),
            data,
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn order(&self) -> usize {
        self.shape.len()
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    fn linear_index(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.shape.len());
        let mut lin = 0;
        let mut stride = 1;
        for (i, &extent) in self.shape.iter().enumerate() {
            debug_assert!(idx[i] < extent);
            lin += idx[i] * stride;
            stride *= extent;
        }
        lin
    }

    pub fn get(&self, idx: &[usize]) -> C64 {
        self.data[self.linear_index(idx)]
    }

    pub fn set(&mut self, idx: &[usize], value: C64) {
        let lin = self.linear_index(idx);
        self.data[lin] = value;
    }

    pub fn fro_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn sub(&self, other: &Tensor) -> Tensor {
        assert_eq!(self.shape, other.shape);
        Tensor {
            shape: self.shape.clone(),
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Mode-n unfolding (modes are 0-based).
    pub fn unfold(&self, mode: usize) -> Matrix {
        assert!(mode < self.order(), "invalid mode {}", mode);
        let rows = self.shape[mode];
        let cols = self.data.len() / rows;
        let mut out = Matrix::zeros(rows, cols);

        // Stride of `mode` in the linearization, and the mixed-radix walk
        // over the remaining modes (lowest mode fastest).
        let mode_stride: usize = self.shape[..mode].iter().product();
        let rest: Vec<usize> = (0..self.order()).filter(|&m| m != mode).collect();
        let mut idx = vec![0usize; rest.len()];
        for col in 0..cols {
            // Base linear offset with the mode index fixed at 0.
            let mut base = 0;
            let mut stride = 1;
            let mut pos = 0;
            for m in 0..self.order() {
                if m == mode {
                    stride *= self.shape[m];
                    continue;
                }
                base += idx[pos] * stride;
                stride *= self.shape[m];
                pos += 1;
            }
            for r in 0..rows {
                out[(r, col)] = self.data[base + r * mode_stride];
            }
            // Advance the mixed-radix counter.
            for (pos, &m) in rest.iter().enumerate() {
                idx[pos] += 1;
                if idx[pos] < self.shape[m] {
                    break;
                }
                idx[pos] = 0;
            }
        }
        out
    }

    /// Inverse of `unfold`: rebuilds the tensor of the given shape.
    pub fn fold(m: &Matrix, mode: usize, shape: &[usize]) -> Tensor {
        assert!(mode < shape.len(), "invalid mode {}", mode);
        assert_eq!(m.rows(), shape[mode], "row count does not match mode extent");
        let total: usize = shape.iter().product();
        assert_eq!(m.rows() * m.cols(), total, "shape mismatch on fold");
        let mut t = Tensor::zeros(shape);

        let mode_stride: usize = shape[..mode].iter().product();
        let rest: Vec<usize> = (0..shape.len()).filter(|&x| x != mode).collect();
        let mut idx = vec![0usize; rest.len()];
        for col in 0..m.cols() {
            let mut base = 0;
            let mut stride = 1;
            let mut pos = 0;
            for x in 0..shape.len() {
                if x == mode {
                    stride *= shape[x];
                    continue;
                }
                base += idx[pos] * stride;
                stride *= shape[x];
                pos += 1;
            }
            for r in 0..m.rows() {
                t.data[base + r * mode_stride] = m[(r, col)];
            }
            for (pos, &x) in rest.iter().enumerate() {
                idx[pos] += 1;
                if idx[pos] < shape[x] {
                    break;
                }
                idx[pos] = 0;
            }
        }
        t
    }

    /// Mode-n product `T x_n A`, replacing extent `I_n` by `A.rows()`.
    pub fn mode_product(&self, a: &Matrix, mode: usize) -> Tensor {
        assert!(mode < self.order(), "invalid mode {}", mode);
        assert_eq!(
            a.cols(),
            self.shape[mode],
            "mode-{} product dimension mismatch",
            mode
        );
        let unfolded = self.unfold(mode);
        let product = a.mul(&unfolded);
        let mut shape = self.shape.clone();
        shape[mode] = a.rows();
        Tensor::fold(&product, mode, &shape)
    }
}

/// Khatri-Rao chain of `factors` excluding `skip`, in descending mode order,
/// matching the unfolding convention (`U_{N-1} krp ... krp U_0`).
pub fn khatri_rao_excluding(factors: &[&Matrix], skip: usize) -> Matrix {
    let rest: Vec<&Matrix> = factors
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != skip)
        .map(|(_, m)| *m)
        .collect();
    assert!(!rest.is_empty());
    let mut acc = rest[0].clone();
    for f in &rest[1..] {
        acc = khatri_rao(f, &acc);
    }
    acc
}

/// Tensor with the given factors as its rank-R decomposition, built through
/// the mode-0 unfolding identity.
pub fn cp_tensor(factors: &[&Matrix]) -> Tensor {
    assert!(factors.len() >= 2);
    let rank = factors[0].cols();
    for f in factors {
        assert_eq!(f.cols(), rank, "factor rank mismatch");
    }
    let shape: Vec<usize> = factors.iter().map(|f| f.rows()).collect();
    let w = khatri_rao_excluding(factors, 0);
    let unfolded = factors[0].mul(&w.transpose());
    Tensor::fold(&unfolded, 0, &shape)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{Purpose, Stream};

    fn random_matrix(rows: usize, cols: usize, s: &mut Stream) -> Matrix {
        Matrix::from_fn(rows, cols, |_, _| s.next_cn(1.0))
    }

    fn random_tensor(shape: &[usize], s: &mut Stream) -> Tensor {
        let total: usize = shape.iter().product();
        Tensor::from_data(shape, (0..total).map(|_| s.next_cn(1.0)).collect())
    }

    /// Brute-force rank-R reconstruction, independent of the unfolding path.
    fn cp_brute_force(factors: &[&Matrix]) -> Tensor {
        let shape: Vec<usize> = factors.iter().map(|f| f.rows()).collect();
        let rank = factors[0].cols();
        let mut t = Tensor::zeros(&shape);
        let mut idx = vec![0usize; shape.len()];
        let total: usize = shape.iter().product();
        for _ in 0..total {
            let mut acc = C64::new(0.0, 0.0);
            for p in 0..rank {
                let mut term = C64::new(1.0, 0.0);
                for (m, f) in factors.iter().enumerate() {
                    term *= f[(idx[m], p)];
                }
                acc += term;
            }
            t.set(&idx, acc);
            for m in 0..shape.len() {
                idx[m] += 1;
                if idx[m] < shape[m] {
                    break;
                }
                idx[m] = 0;
            }
        }
        t
    }

    #[test]
    fn mode0_unfolding_of_counting_tensor() {
        // 2x2x2 tensor with linearized entries 1..8; first row of the mode-0
        // unfolding enumerates the remaining indices with mode 1 fastest.
        let data: Vec<C64> = (1..=8).map(|k| C64::new(k as f64, 0.0)).collect();
        let t = Tensor::from_data(&[2, 2, 2], data);
        let m = t.unfold(0);
        let row: Vec<f64> = (0..4).map(|c| m[(0, c)].re).collect();
        assert_eq!(row, vec![1.0, 3.0, 5.0, 7.0]);
    }

    #[test]
    fn fold_unfold_roundtrip_all_modes() {
        let mut s = Stream::from_key(20, 0, 0, 0, Purpose::Geometry);
        let t = random_tensor(&[3, 4, 5], &mut s);
        for mode in 0..3 {
            let back = Tensor::fold(&t.unfold(mode), mode, t.shape());
            assert_eq!(back, t);
        }
        let t4 = random_tensor(&[2, 3, 4, 5], &mut s);
        for mode in 0..4 {
            let back = Tensor::fold(&t4.unfold(mode), mode, t4.shape());
            assert_eq!(back, t4);
        }
    }

    #[test]
    fn cp_unfolding_identity() {
        // unfold(T, n) == U_n (U_{N-1} krp .. krp U_0 without U_n)^T against
        // the brute-force reconstruction.
        let mut s = Stream::from_key(21, 0, 0, 0, Purpose::Geometry);
        let u0 = random_matrix(3, 4, &mut s);
        let u1 = random_matrix(2, 4, &mut s);
        let u2 = random_matrix(5, 4, &mut s);
        let factors = [&u0, &u1, &u2];
        let t = cp_brute_force(&factors);
        for mode in 0..3 {
            let w = khatri_rao_excluding(&factors, mode);
            let expect = factors[mode].mul(&w.transpose());
            let got = t.unfold(mode);
            let err = got.sub(&expect).fro_norm() / expect.fro_norm();
            assert!(err < 1e-12, "mode {mode} err {err:.3e}");
        }
        // The unfolding-based builder agrees with brute force.
        let built = cp_tensor(&factors);
        assert!(built.sub(&t).fro_norm() / t.fro_norm() < 1e-12);
    }

    #[test]
    fn mode_product_with_identity_is_exact() {
        let mut s = Stream::from_key(22, 0, 0, 0, Purpose::Geometry);
        let t = random_tensor(&[3, 4, 5], &mut s);
        for mode in 0..3 {
            let i = Matrix::identity(t.shape()[mode]);
            let r = t.mode_product(&i, mode);
            assert_eq!(r.shape(), t.shape());
            assert_eq!(r.data(), t.data());
        }
    }

    #[test]
    fn mode_products_on_distinct_modes_commute() {
        let mut s = Stream::from_key(23, 0, 0, 0, Purpose::Geometry);
        let t = random_tensor(&[3, 4, 5], &mut s);
        let a = random_matrix(6, 3, &mut s);
        let b = random_matrix(7, 4, &mut s);
        let ab = t.mode_product(&a, 0).mode_product(&b, 1);
        let ba = t.mode_product(&b, 1).mode_product(&a, 0);
        assert!(ab.sub(&ba).fro_norm() / ab.fro_norm() < 1e-13);
    }

    #[test]
    fn repeated_mode_product_composes() {
        let mut s = Stream::from_key(24, 0, 0, 0, Purpose::Geometry);
        let t = random_tensor(&[3, 4, 5], &mut s);
        let a = random_matrix(6, 4, &mut s);
        let b = random_matrix(2, 6, &mut s);
        let twice = t.mode_product(&a, 1).mode_product(&b, 1);
        let once = t.mode_product(&b.mul(&a), 1);
        assert!(twice.sub(&once).fro_norm() / once.fro_norm() < 1e-12);
    }

    #[test]
    fn mode_product_shape_contract() {
        let mut s = Stream::from_key(25, 0, 0, 0, Purpose::Geometry);
        let t = random_tensor(&[3, 4, 5], &mut s);
        let a = random_matrix(7, 4, &mut s);
        let r = t.mode_product(&a, 1);
        assert_eq!(r.shape(), &[3, 7, 5]);
    }

    #[test]
    #[should_panic(expected = "invalid mode")]
    fn unfold_rejects_invalid_mode() {
        let t = Tensor::zeros(&[2, 2]);
        let _ = t.unfold(2);
    }

    #[test]
    fn matrix_and_order2_tensor_share_layout() {
        let mut s = Stream::from_key(26, 0, 0, 0, Purpose::Geometry);
        let m = random_matrix(4, 6, &mut s);
        let t = Tensor::from_data(&[4, 6], m.vec());
        assert_eq!(t.unfold(0).data(), m.data());
    }
}
