#pragma once

// Loss-sequence generators.

#include <cstdint>
#include <istream>
#include <string>
#include <variant>
#include <vector>

#include "fpl/core.hpp"
#include "fpl/probability.hpp"

namespace fpl {

namespace env {

/// Two experts: losses (0, 1/2), (1, 0), (0, 1), (1, 0), ... on which Follow
/// the Leader picks the expert that is about to lose at every step t >= 2.
struct FlKiller {};
/// Independent 0/1 losses with P[s^i_t = 1] = p_i.
struct Bernoulli {
  std::vector<double> probabilities;
  std::uint64_t seed = 0;
};
/// Loss 1 on the expert the predictor is most likely to follow, 0 elsewhere.
struct GreedyAdversary {};
/// Rows of a loss file, one step per line.
struct Playback {
  std::string path;
};

}  // namespace env

struct EnvironmentSpec {
  std::variant<env::FlKiller, env::Bernoulli, env::GreedyAdversary, env::Playback> variant;
  std::uint64_t horizon = 0;
};

std::string environment_name(const EnvironmentSpec& spec);

/// Parses the playback format: n whitespace-separated losses in [0, 1] per
/// line; blank lines and lines starting with '#' are skipped. Errors carry the
/// 1-based line number.
std::vector<LossVector> read_playback(std::istream& in, std::size_t n);
std::vector<LossVector> read_playback_file(const std::string& path, std::size_t n);

class Environment {
 public:
  /// Validates the spec against the number of experts; playback files are read here.
  Environment(EnvironmentSpec spec, std::size_t n);

  /// True when next_loss needs the predictor's weights.
  bool adaptive() const noexcept;
  std::size_t size() const noexcept { return n_; }
  std::uint64_t horizon() const noexcept { return spec_.horizon; }
  const EnvironmentSpec& spec() const noexcept { return spec_; }

  /// Loss vector for step t (1-based, t <= horizon). `context` must be given
  /// for the adaptive adversary.
  LossVector next_loss(std::uint64_t t, const WeightVector* context = nullptr) const;

 private:
  EnvironmentSpec spec_;
  std::size_t n_;
  std::vector<LossVector> rows_;
};

/// Stateless form for the generated variants (playback is read on each call).
LossVector next_loss(const EnvironmentSpec& spec, std::size_t n, std::uint64_t t,
                     const WeightVector* context = nullptr);

}  // namespace fpl
