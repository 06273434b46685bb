use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};

/// Pulay extrapolation over stored (Fock, residual) pairs.
#[derive(Debug, Clone)]
pub struct Diis {
    capacity: usize,
    focks: VecDeque<DMatrix<f64>>,
    errors: VecDeque<DMatrix<f64>>,
}

impl Diis {
    pub fn new(capacity: usize) -> Self {
        Diis {
            capacity: capacity.max(1),
            focks: VecDeque::new(),
            errors: VecDeque::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.focks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.focks.is_empty()
    }

    pub fn push(&mut self, fock: DMatrix<f64>, error: DMatrix<f64>) {
        if self.focks.len() == self.capacity {
            self.focks.pop_front();
            self.errors.pop_front();
        }
        self.focks.push_back(fock);
        self.errors.push_back(error);
    }

    /// Extrapolated Fock matrix, or `None` with fewer than two vectors.
    /// Drops the oldest vectors while the B matrix is singular.
    pub fn extrapolate(&mut self) -> Option<DMatrix<f64>> {
        while self.focks.len() >= 2 {
            let m = self.focks.len();
            let mut b = DMatrix::from_element(m + 1, m + 1, -1.0);
            b[(m, m)] = 0.0;
            for i in 0..m {
                for j in 0..=i {
                    let v = self.errors[i].dot(&self.errors[j]);
                    b[(i, j)] = v;
                    b[(j, i)] = v;
                }
            }
            let mut rhs = DVector::zeros(m + 1);
            rhs[m] = -1.0;
            if let Some(c) = b.lu().solve(&rhs) {
                if c.iter().all(|x| x.is_finite()) {
                    let mut f = DMatrix::zeros(self.focks[0].nrows(), self.focks[0].ncols());
                    for (k, fk) in self.focks.iter().enumerate() {
                        f += fk * c[k];
                    }
                    return Some(f);
                }
            }
            self.focks.pop_front();
            self.errors.pop_front();
        }
        None
    }
}
