#include "servesim/profiler.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "servesim/errors.h"

namespace servesim {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double unit_draw(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

Tokens bucket_ceiling(Tokens length, Tokens width) {
  return bucket_of(length, width) * width;
}

// ceil(value * factor), treating products within rounding noise of an
// integer as that integer (50 * 1.1 must give 55, not 56).
Tokens inflate(Tokens value, double factor) {
  if (factor == 1.0) return value;
  const double scaled = static_cast<double>(value) * factor;
  const double nearest = std::round(scaled);
  if (std::abs(scaled - nearest) <= 1e-9 * scaled) {
    return static_cast<Tokens>(nearest);
  }
  return static_cast<Tokens>(std::ceil(scaled));
}

struct RawPrediction {
  Tokens true_len;
  std::uint64_t stream;

  Tokens operator()(const OraclePredictor&) const { return true_len; }
  Tokens operator()(const BucketedPredictor& p) const {
    return bucket_ceiling(true_len, p.bucket_width);
  }
  Tokens operator()(const NoisyPredictor& p) const {
    Tokens bucket = bucket_of(true_len, p.bucket_width);
    std::mt19937_64 gen(stream);
    if (unit_draw(gen) < p.error_rate) {
      const bool up = bucket == 1 || unit_draw(gen) < 0.5;
      bucket += up ? 1 : -1;
    }
    return bucket * p.bucket_width;
  }
  Tokens operator()(const ConstantPredictor& p) const { return p.value; }
};

}  // namespace

void validate(const Predictor& predictor) {
  std::visit(
      [](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, BucketedPredictor>) {
          if (p.bucket_width < 1) {
            throw ConfigError("bucket_width must be >= 1");
          }
        } else if constexpr (std::is_same_v<T, NoisyPredictor>) {
          if (p.bucket_width < 1) {
            throw ConfigError("bucket_width must be >= 1");
          }
          if (!(p.error_rate >= 0.0 && p.error_rate <= 1.0)) {
            throw ConfigError("error_rate must lie in [0, 1]");
          }
        } else if constexpr (std::is_same_v<T, ConstantPredictor>) {
          if (p.value < 1) throw ConfigError("constant prediction must be >= 1");
        }
      },
      predictor);
}

std::string predictor_name(const Predictor& predictor) {
  static constexpr const char* kNames[] = {"oracle", "bucketed", "noisy",
                                           "constant"};
  return kNames[predictor.index()];
}

void MonitorConfig::validate() const {
  if (!(std::isfinite(gamma) && gamma >= 1.0)) {
    throw ConfigError("monitor gamma must be finite and >= 1");
  }
  if (!(std::isfinite(cap) && cap >= 1.0)) {
    throw ConfigError("monitor cap must be finite and >= 1");
  }
}

Tokens bucket_of(Tokens length, Tokens bucket_width) {
  return (length + bucket_width - 1) / bucket_width;
}

Request profile(const Request& request, const Predictor& predictor,
                const MonitorState& monitor, std::uint64_t seed) {
  validate(predictor);
  const std::uint64_t stream = splitmix64(seed ^ splitmix64(request.id()));
  const Tokens raw =
      std::visit(RawPrediction{request.true_output_len(), stream}, predictor);
  return request.with_prediction(inflate(raw, monitor.inflation_factor));
}

MonitorState observe_completion(const MonitorState& monitor, Tokens predicted,
                                Tokens actual, const MonitorConfig& cfg) {
  if (actual <= predicted) return monitor;
  MonitorState next = monitor;
  next.corrections += 1;
  next.inflation_factor =
      std::min(monitor.inflation_factor * cfg.gamma, cfg.cap);
  next.inflation_factor = std::max(next.inflation_factor, 1.0);
  return next;
}

}  // namespace servesim
