#pragma once

#include "semtrack/fusion.hpp"

namespace semtrack::verify {

// Straight-line transcriptions of the adapter and VSFM forward passes on flat
// arrays, sharing no code with the library operators.
Tensor oracle_adapter(const Tensor& x_q, const Tensor& x_s, const AdapterParams& p);
Tensor oracle_vsfm(const Tensor& x_as, const Tensor& x_q, const VsfmParams& p);

}  // namespace semtrack::verify
