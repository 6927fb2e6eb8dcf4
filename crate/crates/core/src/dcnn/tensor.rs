use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{DcnnError, Real};

/// Dense `(batch, channels, height, width)` array, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T> {
    shape: [usize; 4],
    data: Vec<T>,
}

impl<T: Real> Tensor<T> {
    pub fn zeros(shape: [usize; 4]) -> Self {
        Self { shape, data: vec![T::ZERO; shape.iter().product()] }
    }

    pub fn from_vec(shape: [usize; 4], data: Vec<T>) -> Result<Self, DcnnError> {
        let want: usize = shape.iter().product();
        if data.len() != want {
            return Err(DcnnError::ShapeMismatch(format!("{} values for shape {:?}", data.len(), shape)));
        }
        Ok(Self { shape, data })
    }

    pub fn shape(&self) -> [usize; 4] {
        self.shape
    }

    pub fn batch(&self) -> usize {
        self.shape[0]
    }

    /// Elements per sample.
    pub fn sample_len(&self) -> usize {
        self.shape[1] * self.shape[2] * self.shape[3]
    }

    pub fn sample(&self, i: usize) -> &[T] {
        let s = self.sample_len();
        &self.data[i * s..(i + 1) * s]
    }

    pub fn sample_mut(&mut self, i: usize) -> &mut [T] {
        let s = self.sample_len();
        &mut self.data[i * s..(i + 1) * s]
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    /// Same data viewed as `(batch, features, 1, 1)`.
    pub fn flatten(self) -> Self {
        let s = self.sample_len();
        Self { shape: [self.shape[0], s, 1, 1], data: self.data }
    }

    pub fn reshape(self, shape: [usize; 4]) -> Result<Self, DcnnError> {
        Self::from_vec(shape, self.data)
    }

    /// Stacks per-sample buffers of identical shape.
    pub fn stack(per_sample: Vec<Vec<T>>, inner: [usize; 3]) -> Self {
        let n = per_sample.len();
        let mut data = Vec::with_capacity(n * inner.iter().product::<usize>());
        for s in per_sample {
            data.extend_from_slice(&s);
        }
        Self { shape: [n, inner[0], inner[1], inner[2]], data }
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}
