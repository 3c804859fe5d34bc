#pragma once

#include "pbnlc/types.hpp"

namespace pbnlc {

// In-place transforms with the e^{-j w t} analysis convention on the forward
// direction. `ifft` includes the 1/N normalization. Plans are cached per size
// and created under a lock; execution is thread-safe.
void fft(ArrayXcd& data);
void ifft(ArrayXcd& data);

/// Angular frequency of each FFT bin (rad/s), in FFT ordering.
ArrayXd angular_frequency_grid(Eigen::Index n, double sample_rate);

}  // namespace pbnlc
