//! In-place radix-2 complex FFT and its tensor-product extension to
//! cubic grids.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

/// Precomputed tables for transforms of a fixed power-of-two length.
#[derive(Debug, Clone)]
pub struct Fft {
    len: usize,
    twiddles: Vec<Complex64>,
    bitrev: Vec<usize>,
}

impl Fft {
    /// # Panics
    /// If `len` is not a power of two.
    pub fn new(len: usize) -> Self {
        assert!(len.is_power_of_two(), "FFT length must be a power of two");
        let twiddles = (0..len / 2)
            .map(|k| {
                let theta = -2.0 * PI * k as f64 / len as f64;
                Complex64::new(libm::cos(theta), libm::sin(theta))
            })
            .collect();
        let bits = len.trailing_zeros();
        let bitrev = (0..len)
            .map(|i| {
                if bits == 0 {
                    0
                } else {
                    i.reverse_bits() >> (usize::BITS - bits)
                }
            })
            .collect();
        Self {
            len,
            twiddles,
            bitrev,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// `X_k = Σ_j x_j e^{-2πi jk/len}`.
    pub fn forward(&self, buf: &mut [Complex64]) {
        self.run(buf, false);
    }

    /// Inverse of [`Fft::forward`], including the `1/len` factor.
    pub fn inverse(&self, buf: &mut [Complex64]) {
        self.run(buf, true);
        let scale = 1.0 / self.len as f64;
        for v in buf.iter_mut() {
            *v *= scale;
        }
    }

    fn run(&self, buf: &mut [Complex64], inverse: bool) {
        let n = self.len;
        debug_assert_eq!(buf.len(), n);
        for i in 0..n {
            let j = self.bitrev[i];
            if j > i {
                buf.swap(i, j);
            }
        }
        let mut half = 1;
        while half < n {
            let step = n / (2 * half);
            for start in (0..n).step_by(2 * half) {
                for k in 0..half {
                    let mut w = self.twiddles[k * step];
                    if inverse {
                        w = w.conj();
                    }
                    let a = buf[start + k];
                    let b = buf[start + k + half] * w;
                    buf[start + k] = a + b;
                    buf[start + k + half] = a - b;
                }
            }
            half *= 2;
        }
    }

    /// Transforms every line of a row-major cube with `dims` axes of length
    /// `self.len()`.
    pub fn transform_cube(&self, data: &mut [Complex64], dims: usize, inverse: bool) {
        let n = self.len;
        let total = n.pow(dims as u32);
        debug_assert_eq!(data.len(), total);
        let mut line = alloc::vec![Complex64::new(0.0, 0.0); n];
        for axis in 0..dims {
            let stride = n.pow((dims - 1 - axis) as u32);
            let outer = total / (n * stride);
            for o in 0..outer {
                for inner in 0..stride {
                    let base = o * n * stride + inner;
                    for (j, slot) in line.iter_mut().enumerate() {
                        *slot = data[base + j * stride];
                    }
                    if inverse {
                        self.inverse(&mut line);
                    } else {
                        self.forward(&mut line);
                    }
                    for (j, v) in line.iter().enumerate() {
                        data[base + j * stride] = *v;
                    }
                }
            }
        }
    }
}
