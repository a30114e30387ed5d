//! Unnormalized forward DFT for arbitrary lengths.
//!
//! Lengths whose prime factors are all at most [`MAX_DIRECT_RADIX`] go
//! through a recursive mixed-radix Cooley-Tukey transform. Anything with a
//! larger prime factor is routed through Bluestein's chirp-z algorithm on a
//! power-of-two grid. Twiddles are evaluated directly from their angle
//! instead of by recurrence, so accuracy does not drift with length.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

/// Largest prime handled by a direct radix-p butterfly.
pub const MAX_DIRECT_RADIX: usize = 31;

#[derive(Debug, Clone)]
enum Strategy {
    MixedRadix { factors: Vec<usize>, twiddles: Vec<Complex64> },
    Bluestein(alloc::boxed::Box<Bluestein>),
}

/// A precomputed transform for one length. Reuse it across rows and windows
/// of the same size.
#[derive(Debug, Clone)]
pub struct FftPlan {
    len: usize,
    strategy: Strategy,
    /// For even lengths: a half-length plan and `exp(-2 pi i k / len)` for
    /// `k < len / 2`, used to transform real input as packed complex pairs.
    real: Option<(alloc::boxed::Box<FftPlan>, Vec<Complex64>)>,
}

#[derive(Debug, Clone)]
struct Bluestein {
    /// `exp(-i pi k^2 / n)` for `k in 0..n`.
    chirp: Vec<Complex64>,
    /// Forward transform of the conjugate chirp laid out circularly.
    kernel_spectrum: Vec<Complex64>,
    inner: FftPlan,
}

fn unit(angle: f64) -> Complex64 {
    Complex64::new(libm::cos(angle), libm::sin(angle))
}

fn factorize(mut n: usize) -> Vec<usize> {
    let mut factors = Vec::new();
    // Radix 4 first keeps the recursion shallow for power-of-two sizes.
    while n % 4 == 0 {
        factors.push(4);
        n /= 4;
    }
    let mut p = 2;
    while p * p <= n {
        while n % p == 0 {
            factors.push(p);
            n /= p;
        }
        p += 1;
    }
    if n > 1 {
        factors.push(n);
    }
    factors
}

impl FftPlan {
    pub fn new(len: usize) -> Self {
        let mut plan = Self::complex(len);
        if len % 2 == 0 {
            let half = len / 2;
            let tw = (0..half).map(|k| unit(-2.0 * PI * k as f64 / len as f64)).collect();
            plan.real = Some((alloc::boxed::Box::new(Self::complex(half)), tw));
        }
        plan
    }

    fn complex(len: usize) -> Self {
        assert!(len > 0, "FFT length must be positive");
        let factors = factorize(len);
        let needs_bluestein = factors.iter().any(|&p| p > MAX_DIRECT_RADIX);
        let strategy = if needs_bluestein {
            Strategy::Bluestein(alloc::boxed::Box::new(Bluestein::new(len)))
        } else {
            let twiddles = (0..len)
                .map(|k| unit(-2.0 * PI * k as f64 / len as f64))
                .collect();
            Strategy::MixedRadix { factors, twiddles }
        };
        Self {
            len,
            strategy,
            real: None,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Forward transform `X[k] = sum_n x[n] exp(-2 pi i k n / N)`.
    pub fn forward(&self, input: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(input.len(), self.len, "input length does not match plan");
        match &self.strategy {
            Strategy::MixedRadix { factors, twiddles } => {
                let mut out = vec![Complex64::new(0.0, 0.0); self.len];
                let mut scratch = Vec::with_capacity(factors.iter().copied().max().unwrap_or(1));
                mixed_radix(
                    input,
                    0,
                    1,
                    &mut out,
                    self.len,
                    factors,
                    twiddles,
                    self.len,
                    &mut scratch,
                );
                out
            }
            Strategy::Bluestein(b) => b.forward(input),
        }
    }

    /// Forward transform of a real sequence.
    pub fn forward_real(&self, input: &[f64]) -> Vec<Complex64> {
        let Some((half, tw)) = &self.real else {
            let buf: Vec<Complex64> = input.iter().map(|&v| Complex64::new(v, 0.0)).collect();
            return self.forward(&buf);
        };
        assert_eq!(input.len(), self.len, "input length does not match plan");
        let n = self.len;
        let h = n / 2;
        let packed: Vec<Complex64> = input.chunks_exact(2).map(|p| Complex64::new(p[0], p[1])).collect();
        let z = half.forward(&packed);
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for k in 0..h {
            let a = z[k];
            let b = z[(h - k) % h].conj();
            let even = (a + b) * 0.5;
            // (a - b) / 2i
            let d = a - b;
            let odd = Complex64::new(d.im * 0.5, -d.re * 0.5);
            out[k] = even + tw[k] * odd;
        }
        out[h] = Complex64::new(z[0].re - z[0].im, 0.0);
        for k in h + 1..n {
            out[k] = out[n - k].conj();
        }
        out
    }

    /// Inverse transform scaled by `1/N`.
    pub fn inverse(&self, input: &[Complex64]) -> Vec<Complex64> {
        let conj: Vec<Complex64> = input.iter().map(|c| c.conj()).collect();
        let n = self.len as f64;
        self.forward(&conj)
            .into_iter()
            .map(|c| c.conj() / n)
            .collect()
    }
}

#[allow(clippy::too_many_arguments)]
fn mixed_radix(
    input: &[Complex64],
    offset: usize,
    stride: usize,
    out: &mut [Complex64],
    n: usize,
    factors: &[usize],
    twiddles: &[Complex64],
    total: usize,
    scratch: &mut Vec<Complex64>,
) {
    if n == 1 {
        out[0] = input[offset];
        return;
    }
    let p = factors[0];
    let m = n / p;
    for q in 0..p {
        mixed_radix(
            input,
            offset + q * stride,
            stride * p,
            &mut out[q * m..(q + 1) * m],
            m,
            &factors[1..],
            twiddles,
            total,
            scratch,
        );
    }
    // W_n^e lives at twiddles[e * total / n].
    let step_n = total / n;
    let step_p = total / p;
    let radix5 = if p == 5 {
        [
            libm::cos(2.0 * PI / 5.0),
            libm::sin(2.0 * PI / 5.0),
            libm::cos(4.0 * PI / 5.0),
            libm::sin(4.0 * PI / 5.0),
        ]
    } else {
        [0.0; 4]
    };
    for k in 0..m {
        scratch.clear();
        // q * k < n, so the twiddle exponent needs no reduction.
        let mut e = 0;
        for q in 0..p {
            scratch.push(out[q * m + k] * twiddles[e * step_n]);
            e += k;
        }
        match p {
            2 => {
                let (a, b) = (scratch[0], scratch[1]);
                out[k] = a + b;
                out[k + m] = a - b;
            }
            4 => {
                let (a0, a1, a2, a3) = (scratch[0], scratch[1], scratch[2], scratch[3]);
                let (s02, d02) = (a0 + a2, a0 - a2);
                let (s13, d13) = (a1 + a3, a1 - a3);
                // d13 * -i
                let rot = Complex64::new(d13.im, -d13.re);
                out[k] = s02 + s13;
                out[k + m] = d02 + rot;
                out[k + 2 * m] = s02 - s13;
                out[k + 3 * m] = d02 - rot;
            }
            5 => {
                let [c1, s1, c2, s2] = radix5;
                let a0 = scratch[0];
                let (t1, t3) = (scratch[1] + scratch[4], scratch[1] - scratch[4]);
                let (t2, t4) = (scratch[2] + scratch[3], scratch[2] - scratch[3]);
                let b1 = a0 + t1 * c1 + t2 * c2;
                let b2 = a0 + t1 * c2 + t2 * c1;
                let u1 = t3 * s1 + t4 * s2;
                let u2 = t3 * s2 - t4 * s1;
                // -i * u
                let r1 = Complex64::new(u1.im, -u1.re);
                let r2 = Complex64::new(u2.im, -u2.re);
                out[k] = a0 + t1 + t2;
                out[k + m] = b1 + r1;
                out[k + 2 * m] = b2 + r2;
                out[k + 3 * m] = b2 - r2;
                out[k + 4 * m] = b1 - r1;
            }
            _ => {
                for s in 0..p {
                    let mut acc = scratch[0];
                    let mut e = s;
                    for y in scratch.iter().skip(1) {
                        acc += *y * twiddles[e * step_p];
                        e += s;
                        if e >= p {
                            e -= p;
                        }
                    }
                    out[k + m * s] = acc;
                }
            }
        }
    }
}

impl Bluestein {
    fn new(n: usize) -> Self {
        let conv_len = (2 * n - 1).next_power_of_two();
        // k^2 mod 2n keeps the chirp angle small and exact.
        let chirp: Vec<Complex64> = (0..n)
            .map(|k| {
                let k2 = ((k as u128 * k as u128) % (2 * n as u128)) as f64;
                unit(-PI * k2 / n as f64)
            })
            .collect();
        let mut kernel = vec![Complex64::new(0.0, 0.0); conv_len];
        kernel[0] = chirp[0].conj();
        for k in 1..n {
            kernel[k] = chirp[k].conj();
            kernel[conv_len - k] = chirp[k].conj();
        }
        let inner = FftPlan::complex(conv_len);
        let kernel_spectrum = inner.forward(&kernel);
        Self {
            chirp,
            kernel_spectrum,
            inner,
        }
    }

    fn forward(&self, input: &[Complex64]) -> Vec<Complex64> {
        let n = self.chirp.len();
        let conv_len = self.inner.len();
        let mut a = vec![Complex64::new(0.0, 0.0); conv_len];
        for k in 0..n {
            a[k] = input[k] * self.chirp[k];
        }
        let mut spec = self.inner.forward(&a);
        for (s, k) in spec.iter_mut().zip(&self.kernel_spectrum) {
            *s *= *k;
        }
        let conv = self.inner.inverse(&spec);
        (0..n).map(|k| conv[k] * self.chirp[k]).collect()
    }
}
