#include "metaemb/matrix.hpp"

#include "metaemb/errors.hpp"

namespace metaemb {

double frobenius_diff(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) throw ContractError("frobenius_diff: shape mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    double d = a.data[i] - b.data[i];
    s += d * d;
  }
  return std::sqrt(s);
}

}  // namespace metaemb
