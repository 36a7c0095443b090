//! Thin N-dimensional wrapper around `rustfft`.
//!
//! Transforms are applied axis by axis on a row-major buffer. The inverse
//! transform carries the usual `1/len` normalization so that
//! `ifftn(fftn(x)) = x`.

use num_complex::Complex64;
use rustfft::FftPlanner;

/// In-place N-dimensional FFT of a row-major buffer with the given shape.
pub fn fftn(data: &mut [Complex64], shape: &[usize], inverse: bool) {
    let total: usize = shape.iter().product();
    assert_eq!(data.len(), total, "buffer does not match shape");
    let mut planner = FftPlanner::new();
    let ndim = shape.len();

    for axis in 0..ndim {
        let n = shape[axis];
        if n <= 1 {
            continue;
        }
        let fft = if inverse {
            planner.plan_fft_inverse(n)
        } else {
            planner.plan_fft_forward(n)
        };
        let stride: usize = shape[axis + 1..].iter().product();
        let outer: usize = shape[..axis].iter().product();
        let mut line = vec![Complex64::default(); n];
        let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
        for o in 0..outer {
            let block = o * n * stride;
            for inner in 0..stride {
                let base = block + inner;
                for (k, v) in line.iter_mut().enumerate() {
                    *v = data[base + k * stride];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for (k, v) in line.iter().enumerate() {
                    data[base + k * stride] = *v;
                }
            }
        }
    }

    if inverse {
        let scale = 1.0 / total as f64;
        for v in data.iter_mut() {
            *v *= scale;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_2d() {
        let shape = [8, 16];
        let mut data: Vec<Complex64> = (0..128)
            .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect();
        let orig = data.clone();
        fftn(&mut data, &shape, false);
        fftn(&mut data, &shape, true);
        for (a, b) in data.iter().zip(&orig) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn matches_dft_definition_1d() {
        let n = 16;
        let input: Vec<Complex64> = (0..n)
            .map(|i| Complex64::new((i as f64).sin(), 0.0))
            .collect();
        let mut data = input.clone();
        fftn(&mut data, &[n], false);
        // direct DFT for one bin
        let k = 3;
        let mut acc = Complex64::default();
        for (j, v) in input.iter().enumerate() {
            let phase = -2.0 * std::f64::consts::PI * (k * j) as f64 / n as f64;
            acc += v * Complex64::new(phase.cos(), phase.sin());
        }
        assert!((data[k] - acc).norm() < 1e-12);
    }
}
