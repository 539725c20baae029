#include "spgseg/adam.hpp"

#include <cmath>
#include <vector>

#include "spgseg/error.hpp"

namespace spgseg {

void AdamConfig::validate() const {
  require(beta1 >= 0.0 && beta1 < 1.0, "Adam beta1 must lie in [0, 1)");
  require(beta2 >= 0.0 && beta2 < 1.0, "Adam beta2 must lie in [0, 1)");
  require(epsilon > 0.0, "Adam epsilon must be positive");
}

Adam::Adam(const ModelParams& like, AdamConfig cfg) : cfg_(cfg), first_(like), second_(like) {
  cfg_.validate();
  first_.for_each([](std::string_view, Matrix& m) { m.setZero(); });
  second_.for_each([](std::string_view, Matrix& m) { m.setZero(); });
}

void Adam::step(ModelParams& params, const ModelParams& grads, double learning_rate) {
  ++steps_;
  const double t = static_cast<double>(steps_);
  const double correct1 = 1.0 - std::pow(cfg_.beta1, t);
  const double correct2 = 1.0 - std::pow(cfg_.beta2, t);

  std::vector<const Matrix*> g;
  grads.for_each([&](std::string_view, const Matrix& m) { g.push_back(&m); });
  std::vector<Matrix*> m1, m2;
  first_.for_each([&](std::string_view, Matrix& m) { m1.push_back(&m); });
  second_.for_each([&](std::string_view, Matrix& m) { m2.push_back(&m); });

  std::size_t i = 0;
  params.for_each([&](std::string_view name, Matrix& p) {
    const Matrix& gi = *g[i];
    require(gi.rows() == p.rows() && gi.cols() == p.cols(), "gradient shape mismatch for " + std::string(name));
    Matrix& m = *m1[i];
    Matrix& v = *m2[i];
    m = cfg_.beta1 * m + (1.0 - cfg_.beta1) * gi;
    v = cfg_.beta2 * v + (1.0 - cfg_.beta2) * gi.cwiseProduct(gi);
    p.array() -= learning_rate * (m.array() / correct1) / ((v.array() / correct2).sqrt() + cfg_.epsilon);
    ++i;
  });
}

}  // namespace spgseg
