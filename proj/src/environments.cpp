#include "fpl/environments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "fpl/random.hpp"

namespace fpl {

std::string environment_name(const EnvironmentSpec& spec) {
  switch (spec.variant.index()) {
    case 0:
      return "fl_killer";
    case 1:
      return "bernoulli";
    case 2:
      return "greedy_adversary";
    default:
      return "playback";
  }
}

std::vector<LossVector> read_playback(std::istream& in, std::size_t n) {
  std::vector<LossVector> rows;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;

    std::istringstream fields(line);
    fields.imbue(std::locale::classic());
    std::vector<double> values;
    std::string token;
    while (fields >> token) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(token, &used);
      } catch (const std::exception&) {
        throw FormatError(row, "not a number: '" + token + "'");
      }
      if (used != token.size()) throw FormatError(row, "not a number: '" + token + "'");
      if (!(v >= 0.0 && v <= 1.0)) throw FormatError(row, "loss " + token + " outside [0, 1]");
      values.push_back(v);
    }
    if (values.size() != n) {
      throw FormatError(row, "expected " + std::to_string(n) + " losses, found " + std::to_string(values.size()));
    }
    rows.emplace_back(std::move(values));
  }
  return rows;
}

std::vector<LossVector> read_playback_file(const std::string& path, std::size_t n) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open playback file '" + path + "'");
  return read_playback(in, n);
}

Environment::Environment(EnvironmentSpec spec, std::size_t n) : spec_(std::move(spec)), n_(n) {
  if (n_ == 0) throw InvalidArgument("environment needs at least one expert");
  if (std::holds_alternative<env::FlKiller>(spec_.variant) && n_ != 2) {
    throw InvalidArgument("fl_killer is defined for exactly 2 experts");
  }
  if (const auto* b = std::get_if<env::Bernoulli>(&spec_.variant)) {
    if (b->probabilities.size() != n_) throw InvalidArgument("bernoulli needs one probability per expert");
    for (double p : b->probabilities) {
      if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("bernoulli probabilities must lie in [0, 1]");
    }
  }
  if (const auto* p = std::get_if<env::Playback>(&spec_.variant)) {
    rows_ = read_playback_file(p->path, n_);
    if (rows_.size() < spec_.horizon) {
      throw InvalidArgument("playback file has " + std::to_string(rows_.size()) + " rows, horizon is " +
                            std::to_string(spec_.horizon));
    }
  }
}

bool Environment::adaptive() const noexcept { return std::holds_alternative<env::GreedyAdversary>(spec_.variant); }

LossVector Environment::next_loss(std::uint64_t t, const WeightVector* context) const {
  if (t == 0) throw InvalidArgument("time steps start at 1");
  if (t > spec_.horizon) {
    throw InvalidArgument("step " + std::to_string(t) + " beyond horizon " + std::to_string(spec_.horizon));
  }
  switch (spec_.variant.index()) {
    case 0: {
      // Expert 1: 0 1 0 1 ...; expert 2: 1/2 0 1 0 1 ...
      const bool odd = t % 2 == 1;
      const double second = t == 1 ? 0.5 : (odd ? 1.0 : 0.0);
      return LossVector({odd ? 0.0 : 1.0, second});
    }
    case 1: {
      const auto& b = std::get<env::Bernoulli>(spec_.variant);
      const random::UniformStream stream(random::derive_seed(b.seed, random::Domain::environment));
      std::vector<double> s(n_);
      stream.fill(t, n_, [&](std::size_t i, double u) { s[i] = u < b.probabilities[i] ? 1.0 : 0.0; });
      return LossVector(std::move(s));
    }
    case 2: {
      if (context == nullptr) throw InvalidArgument("greedy adversary needs the predictor's weights");
      if (context->weights.size() != n_) throw InvalidArgument("weights have the wrong length");
      const auto& w = context->weights;
      const auto target = static_cast<std::size_t>(std::max_element(w.begin(), w.end()) - w.begin());
      std::vector<double> s(n_, 0.0);
      s[target] = 1.0;
      return LossVector(std::move(s));
    }
    default:
      return rows_[t - 1];
  }
}

LossVector next_loss(const EnvironmentSpec& spec, std::size_t n, std::uint64_t t, const WeightVector* context) {
  return Environment(spec, n).next_loss(t, context);
}

}  // namespace fpl
