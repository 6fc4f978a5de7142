#include "ns2d/wave.hpp"

#include <stdexcept>

namespace ns2d {

Truncation::Truncation(int k_max) {
  if (k_max < 1) throw std::invalid_argument("Truncation: k_max must be >= 1");
  auto data = std::make_shared<Data>();
  data->k_max = k_max;
  const int r2 = k_max * k_max;
  for (int kx = -k_max; kx <= k_max; ++kx) {
    for (int ky = -k_max; ky <= k_max; ++ky) {
      const WaveVector k{kx, ky};
      const int n2 = norm2(k);
      if (n2 == 0 || n2 > r2) continue;
      data->active.push_back(k);
      if (upper_half(k)) data->half.push_back(k);
    }
  }
  data_ = std::move(data);
}

}  // namespace ns2d
