#include "bridgesmc/model.hpp"

namespace bridgesmc {

void Observations::validate() const {
  if (times.empty()) throw std::invalid_argument("observations: no intervals");
  if (times.size() != values.size())
    throw std::invalid_argument("observations: times/values size mismatch");
  double prev = t0;
  for (size_t k = 0; k < times.size(); ++k) {
    if (!(times[k] > prev)) throw std::invalid_argument("observations: times not increasing");
    if (values[k].empty()) throw std::invalid_argument("observations: empty payload");
    prev = times[k];
  }
}

void DiffusionModel::obs_score_theta(const ThetaVector&, const std::vector<double>&, const double*,
                                     double*) const {
  throw std::logic_error("obs_score_theta not provided by this model");
}

}  // namespace bridgesmc
