#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fedopt/labs/labs.hpp"
#include "fedopt/numerics/parallel.hpp"

namespace fedopt {

namespace {

constexpr std::size_t kChunk = 1024;

Vec start_point(const Problem& p, const BiasOptions& opts) {
  if (opts.x0) {
    if (opts.x0->size() != p.dim()) throw std::invalid_argument("measure_bias: x0 dimension mismatch");
    return *opts.x0;
  }
  const auto opt = p.optimum();
  if (!opt) throw std::invalid_argument("measure_bias: no x0 given and the optimum is unknown");
  return opt->x;
}

}  // namespace

std::vector<BiasEstimate> measure_bias(const Problem& p, double eta, const std::vector<std::size_t>& ks,
                                       std::size_t reps, const BiasOptions& opts) {
  if (reps < 2) throw std::invalid_argument("measure_bias: reps must be >= 2");
  if (ks.empty()) throw std::invalid_argument("measure_bias: no step counts");
  if (!std::is_sorted(ks.begin(), ks.end())) throw std::invalid_argument("measure_bias: step counts must ascend");
  if (!(eta >= 0.0)) throw std::invalid_argument("measure_bias: eta must be >= 0");
  const std::size_t d = p.dim();
  const std::size_t nk = ks.size();
  const Vec x0 = start_point(p, opts);
  const bool scalar = d == 1;
  if (opts.control_variate && !scalar) throw std::invalid_argument("measure_bias: control variate needs a 1-D problem");

  double f1 = 0.0, f2 = 0.0;
  if (opts.control_variate) {
    const auto h = p.second_derivative(x0[0]);
    if (!h) throw std::invalid_argument("measure_bias: control variate needs F''");
    f1 = p.scalar_full_grad(x0[0]);
    f2 = *h;
  }

  // Deterministic references at each k.
  std::vector<Vec> ref(nk, Vec(d));
  {
    Vec z = x0;
    double zl = x0[0];
    std::size_t j = 0;
    for (std::size_t t = 0; j < nk; ++t) {
      while (j < nk && ks[j] == t) {
        ref[j] = z;
        if (opts.control_variate) ref[j][0] = zl - z[0];
        ++j;
      }
      if (j == nk) break;
      if (scalar) {
        if (opts.control_variate) zl -= eta * (f1 + f2 * (zl - x0[0]));
        z[0] -= eta * p.scalar_full_grad(z[0]);
      } else {
        axpy(-eta, p.full_grad(z), z);
      }
    }
  }

  // vals[(i * nk + j) * d + c]: repetition i at ks[j].
  std::vector<double> vals(reps * nk * d);
  const std::size_t chunks = (reps + kChunk - 1) / kChunk;
  parallel_for(chunks, opts.workers, [&](std::size_t c) {
    const std::size_t lo = c * kChunk;
    const std::size_t hi = std::min(reps, lo + kChunk);
    for (std::size_t i = lo; i < hi; ++i) {
      RngStream rng(opts.seed, i);
      double* out = vals.data() + i * nk * d;
      if (scalar) {
        double x = x0[0];
        double xl = x0[0];
        std::size_t j = 0;
        for (std::size_t t = 0; j < nk; ++t) {
          while (j < nk && ks[j] == t) out[j++] = opts.control_variate ? x - xl : x;
          if (j == nk) break;
          const double g = p.scalar_grad(x, rng);
          if (opts.control_variate) {
            const double noise = g - p.scalar_full_grad(x);
            xl -= eta * (f1 + f2 * (xl - x0[0]) + noise);
          }
          x -= eta * g;
        }
      } else {
        Vec x = x0;
        std::size_t j = 0;
        for (std::size_t t = 0; j < nk; ++t) {
          while (j < nk && ks[j] == t) {
            std::copy(x.begin(), x.end(), out + j * d);
            ++j;
          }
          if (j == nk) break;
          axpy(-eta, p.client_grad(0, x, rng), x);
        }
      }
    }
  });

  std::vector<BiasEstimate> est(nk);
  const double n = static_cast<double>(reps);
  for (std::size_t j = 0; j < nk; ++j) {
    BiasEstimate& e = est[j];
    e.mean_bias = Vec(d);
    e.std_error = Vec(d);
    e.reps = reps;
    e.k = ks[j];
    e.eta = eta;
    for (std::size_t c = 0; c < d; ++c) {
      double sum = 0.0;
      for (std::size_t i = 0; i < reps; ++i) sum += vals[(i * nk + j) * d + c];
      const double mean = sum / n;
      double ss = 0.0;
      for (std::size_t i = 0; i < reps; ++i) {
        const double dv = vals[(i * nk + j) * d + c] - mean;
        ss += dv * dv;
      }
      // Control variate: mean(x − xl) + (zl − z); plain: mean(x) − z.
      e.mean_bias[c] = opts.control_variate ? mean + ref[j][c] : mean - ref[j][c];
      e.std_error[c] = std::sqrt(ss / (n - 1.0) / n);
    }
  }
  return est;
}

BiasEstimate measure_bias(const Problem& p, double eta, std::size_t k, std::size_t reps, std::uint64_t seed) {
  BiasOptions opts;
  opts.seed = seed;
  return measure_bias(p, eta, std::vector<std::size_t>{k}, reps, opts).front();
}

double sde_bias(double eta, std::size_t k, double noise_var, double third_derivative) {
  const double kk = static_cast<double>(k);
  return -0.25 * eta * eta * eta * kk * kk * noise_var * third_derivative;
}

double predict_bias_sde(const Problem& p, double eta, std::size_t k, double x0) {
  if (p.dim() != 1) throw std::invalid_argument("predict_bias_sde: needs a one-dimensional problem");
  const auto f3 = p.third_derivative(x0);
  if (!f3) throw std::invalid_argument("predict_bias_sde: F''' unavailable at x0");
  const double v = p.constants().noise_var;
  if (!std::isfinite(v)) throw std::invalid_argument("predict_bias_sde: noise variance unknown");
  return sde_bias(eta, k, v, *f3);
}

double fit_bias_exponent(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 4) throw std::invalid_argument("fit_bias_exponent: needs at least 4 points");
  double sx = 0.0, sy = 0.0;
  for (const auto& [k, b] : points) {
    if (b == 0.0 || !std::isfinite(b)) throw std::invalid_argument("fit_bias_exponent: zero or non-finite bias");
    if (!(k > 0.0)) throw std::invalid_argument("fit_bias_exponent: k must be > 0");
    sx += std::log(k);
    sy += std::log(std::fabs(b));
  }
  const double n = static_cast<double>(points.size());
  const double mx = sx / n, my = sy / n;
  double sxy = 0.0, sxx = 0.0;
  for (const auto& [k, b] : points) {
    const double dx = std::log(k) - mx;
    sxy += dx * (std::log(std::fabs(b)) - my);
    sxx += dx * dx;
  }
  if (sxx == 0.0) throw std::invalid_argument("fit_bias_exponent: step counts must differ");
  return sxy / sxx;
}

}  // namespace fedopt
