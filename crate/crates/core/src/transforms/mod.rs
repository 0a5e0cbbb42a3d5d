//! Fourier transforms, sampling masks, the subsampled MRI operator and
//! periodic finite differences.

pub mod fft;
pub mod gradient;
pub mod mask;
pub mod operator;

pub use fft::{centered_index, dft1, dft2, fft_bin, idft1, idft2, Fft1, Fft2};
pub use gradient::{
    grad1, grad1_adjoint, grad1_multiplier, grad2, grad2_adjoint, integrate_gradient,
    laplacian_symbol, GradientField,
};
pub use mask::{Mask1D, SamplingMask};
pub use operator::{forward, pseudoinverse, SubsampledFourier, SubsampledFourier1D};
