#include "ttrnn/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "ttrnn/error.hpp"
#include "ttrnn/rng.hpp"
#include "ttrnn/tt_linear.hpp"

namespace ttrnn {

namespace {

std::vector<std::size_t> prime_factors(std::size_t n) {
  std::vector<std::size_t> out;
  for (std::size_t p = 2; p * p <= n; ++p) {
    while (n % p == 0) {
      out.push_back(p);
      n /= p;
    }
  }
  if (n > 1) out.push_back(n);
  return out;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

template <typename F>
double time_once(F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  f();
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double>(t1 - t0).count();
}

}  // namespace

ModeDims sweep_modes(std::size_t size, std::size_t mode, std::size_t order) {
  if (size < 2) throw ConfigError("sweep size must be at least 2");
  if (order == 0) {
    if (mode < 2) throw ConfigError("sweep mode size must be at least 2");
    std::vector<std::size_t> modes;
    std::size_t rest = size;
    while (rest % mode == 0) {
      modes.push_back(mode);
      rest /= mode;
    }
    if (rest > 1) {
      if (rest > mode) {
        throw ConfigError("size " + std::to_string(size) + " does not factor into modes of " +
                          std::to_string(mode));
      }
      modes.push_back(rest);
    }
    return ModeDims(modes);
  }
  // Balanced factorization: largest primes first onto the smallest bucket.
  auto primes = prime_factors(size);
  if (primes.size() < order) {
    throw ConfigError("size " + std::to_string(size) + " has fewer than " + std::to_string(order) +
                      " prime factors");
  }
  std::sort(primes.rbegin(), primes.rend());
  std::vector<std::size_t> modes(order, 1);
  for (std::size_t p : primes) *std::min_element(modes.begin(), modes.end()) *= p;
  std::sort(modes.rbegin(), modes.rend());
  return ModeDims(modes);
}

std::vector<BenchPoint> run_scaling_sweep(const SweepConfig& config) {
  if (config.sizes.empty()) throw ConfigError("sweep needs at least one size");
  if (config.batch == 0) throw ConfigError("sweep batch must be positive");
  if (config.repetitions < kMinRepetitions || config.warmup < kMinWarmup) {
    throw ConfigError("sweep timings need at least " + std::to_string(kMinRepetitions) + " repetitions after " +
                      std::to_string(kMinWarmup) + " warmups");
  }
  std::vector<BenchPoint> points;
  Rng seeds(config.seed);
  for (std::size_t size : config.sizes) {
    BenchPoint pt;
    pt.family = config.family;
    pt.rows = size;
    pt.cols = size;
    pt.batch = config.batch;

    LinearMap map = [&]() {
      if (config.family == LayerFamily::TT) {
        const ModeDims modes = sweep_modes(size, config.mode, config.order);
        const TTSpec spec = TTSpec::uniform(modes, modes, config.rank);
        pt.order = spec.order();
        pt.max_rank = spec.max_rank();
        pt.max_mode = modes.max();
        pt.intermediate_bytes = 8 * tt_intermediate_count(spec, config.batch);
        return LinearMap(glorot_init(spec, seeds.next_u64(), false));
      }
      pt.order = 1;
      pt.max_rank = 1;
      pt.max_mode = size;
      Matrix w(size, size);
      Rng rng(seeds.next_u64());
      const double sigma = glorot_stddev(size, size, 1, 1);
      for (double& v : w.values()) v = sigma * rng.normal();
      return LinearMap(DenseMatrix{std::move(w), std::nullopt});
    }();
    pt.param_bytes = 8 * map.param_count();

    Matrix x(config.batch, size);
    Matrix up(config.batch, size);
    Rng rng(seeds.next_u64());
    for (double& v : x.values()) v = rng.normal();
    for (double& v : up.values()) v = rng.normal();

    LinearCache cache;
    LinearMap grad = map.zeros_like();
    Matrix grad_in;
    double sink = 0.0;
    for (int i = 0; i < config.warmup; ++i) {
      sink += forward(map, x, cache)(0, 0);
      backward_accumulate(map, cache, up, grad, &grad_in);
    }
    std::vector<double> fwd;
    std::vector<double> bwd;
    for (int i = 0; i < config.repetitions; ++i) {
      fwd.push_back(time_once([&] { sink += forward(map, x, cache)(0, 0); }));
      bwd.push_back(time_once([&] { backward_accumulate(map, cache, up, grad, &grad_in); }));
    }
    if (!std::isfinite(sink)) throw NumericError("benchmark produced non-finite output");
    pt.forward_seconds = median(fwd);
    pt.backward_seconds = median(bwd);
    points.push_back(pt);
  }
  return points;
}

SlopeFit fit_loglog_slope(const std::vector<double>& sizes, const std::vector<double>& times) {
  if (sizes.size() != times.size()) throw FitError("sizes and times differ in length");
  if (sizes.size() < 3) throw FitError("slope fit needs at least three points");
  const auto n = static_cast<double>(sizes.size());
  std::vector<double> lx;
  std::vector<double> ly;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (!(sizes[i] > 0) || !(times[i] > 0)) throw FitError("slope fit needs positive values");
    lx.push_back(std::log(sizes[i]));
    ly.push_back(std::log(times[i]));
  }
  double mx = 0;
  double my = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0;
  double sxy = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (sxx <= 0) throw FitError("slope fit needs at least two distinct sizes");
  SlopeFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double r = ly[i] - (fit.intercept + fit.slope * lx[i]);
    ss += r * r;
  }
  fit.residual = std::sqrt(ss / n);
  return fit;
}

SlopeFit fit_forward_slope(const std::vector<BenchPoint>& points) {
  std::vector<double> sizes;
  std::vector<double> times;
  for (const auto& p : points) {
    sizes.push_back(static_cast<double>(p.rows));
    times.push_back(p.forward_seconds);
  }
  return fit_loglog_slope(sizes, times);
}

std::string family_name(LayerFamily family) {
  return family == LayerFamily::TT ? "tt" : "dense";
}

std::string format_bench_point(const BenchPoint& p) {
  std::ostringstream os;
  os << "family=" << family_name(p.family) << " M=" << p.rows << " N=" << p.cols
     << " d=" << p.order << " r=" << p.max_rank << " m=" << p.max_mode << " batch=" << p.batch
     << " forward_s=" << p.forward_seconds << " backward_s=" << p.backward_seconds
     << " param_bytes=" << p.param_bytes << " intermediate_bytes=" << p.intermediate_bytes;
  return os.str();
}

}  // namespace ttrnn
