#include "qavb/datagen_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string_view>

#include "qavb/error.hpp"
#include "qavb/random.hpp"

namespace qavb {

void GenerativeSpec::validate() const {
  if (dim < 1) throw ValidationError("generative spec: dimension must be at least 1");
  if (components < 1) throw ValidationError("generative spec: components must be at least 1");
  if (points < components) throw ValidationError("generative spec: need at least one point per component");
  if (!(box_half_width > 0.0)) throw ValidationError("generative spec: box half-width must be positive");
  if (!(variance > 0.0)) throw ValidationError("generative spec: variance must be positive");
  if (!(min_separation >= 0.0)) throw ValidationError("generative spec: min_separation must be nonnegative");
}

void Dataset::validate() const {
  if (points.rows() < 1 || points.cols() < 1) throw ValidationError("dataset: no points");
  if (!points.allFinite()) throw ValidationError("dataset: non-finite coordinate");
  if (labels) {
    if (static_cast<Eigen::Index>(labels->size()) != points.rows()) {
      throw ValidationError("dataset: label count differs from point count");
    }
    for (std::size_t i = 0; i < labels->size(); ++i) {
      const int l = (*labels)[i];
      if (l < 1 || l > components) {
        throw ValidationError("dataset: label " + std::to_string(l) + " of point " +
                              std::to_string(i + 1) + " outside [1, " +
                              std::to_string(components) + "]");
      }
    }
  }
  if (params) {
    const auto C = params->weights.size();
    if (C != components || params->means.size() != static_cast<std::size_t>(C) ||
        params->covariances.size() != static_cast<std::size_t>(C)) {
      throw ValidationError("dataset: generative parameter block disagrees with component count");
    }
    for (Eigen::Index c = 0; c < C; ++c) {
      if (params->means[c].size() != points.cols() || params->covariances[c].rows() != points.cols() ||
          params->covariances[c].cols() != points.cols()) {
        throw ValidationError("dataset: generative parameter dimension mismatch");
      }
    }
  }
}

Dataset generate(const GenerativeSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  const int C = spec.components;
  const int D = spec.dim;

  GenerativeParams gp;
  const double min_dist = spec.min_separation * std::sqrt(spec.variance);
  for (int attempt = 0;; ++attempt) {
    if (attempt == kMaxMeanDraws) {
      throw ValidationError("generative spec: could not place " + std::to_string(C) +
                            " means with the requested separation");
    }
    gp.means.assign(C, Eigen::VectorXd(D));
    for (auto& mu : gp.means) {
      for (int d = 0; d < D; ++d) mu[d] = rng.uniform(-spec.box_half_width, spec.box_half_width);
    }
    bool separated = true;
    for (int a = 0; a < C && separated; ++a) {
      for (int b = a + 1; b < C && separated; ++b) separated = (gp.means[a] - gp.means[b]).norm() >= min_dist;
    }
    if (separated) break;
  }
  gp.covariances.assign(C, spec.variance * Eigen::MatrixXd::Identity(D, D));
  if (spec.weights == WeightMode::Equal) {
    gp.weights = Eigen::VectorXd::Constant(C, 1.0 / C);
  } else {
    const std::vector<double> ones(C, 1.0);
    const auto w = rng.dirichlet(ones);
    gp.weights = Eigen::Map<const Eigen::VectorXd>(w.data(), C);
  }

  Dataset ds;
  ds.components = C;
  ds.seed = spec.seed;
  ds.points.resize(spec.points, D);
  std::vector<int> labels(spec.points);
  const std::vector<double> weights(gp.weights.data(), gp.weights.data() + C);
  const double sd = std::sqrt(spec.variance);
  for (int i = 0; i < spec.points; ++i) {
    const auto c = rng.categorical(weights);
    labels[i] = static_cast<int>(c) + 1;
    for (int d = 0; d < D; ++d) ds.points(i, d) = gp.means[c][d] + sd * rng.normal();
  }
  ds.labels = std::move(labels);
  ds.params = std::move(gp);
  return ds;
}

namespace {

constexpr std::string_view kMagic = "QAVBDATA v1";

void put_real(std::ostream& os, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  os << buf;
}

class LineReader {
 public:
  explicit LineReader(const std::string& text) : in_(text) {}

  bool next(std::string& line) {
    while (std::getline(in_, line)) {
      ++lineno_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      return true;
    }
    return false;
  }
  int lineno() const { return lineno_; }

  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError("QAVBDATA line " + std::to_string(lineno_) + ": " + msg);
  }

 private:
  std::istringstream in_;
  int lineno_ = 0;
};

std::vector<std::string_view> split(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(',', start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double to_real(std::string_view f, const LineReader& r, const char* field) {
  double v = 0.0;
  const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
  if (res.ec != std::errc() || res.ptr != f.data() + f.size()) {
    r.fail(std::string("field '") + field + "' is not a real number: '" + std::string(f) + "'");
  }
  return v;
}

long long to_int(std::string_view f, const LineReader& r, const char* field) {
  long long v = 0;
  const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
  if (res.ec != std::errc() || res.ptr != f.data() + f.size()) {
    r.fail(std::string("field '") + field + "' is not an integer: '" + std::string(f) + "'");
  }
  return v;
}

}  // namespace

std::string format_dataset(const Dataset& ds) {
  ds.validate();
  std::ostringstream os;
  const int D = ds.dim();
  os << kMagic << '\n';
  os << "header," << D << ',' << ds.components << ',' << ds.size() << ',' << ds.seed << ','
     << Rng::kRngName << ',' << (ds.labels ? 1 : 0) << ',' << (ds.params ? 1 : 0) << '\n';
  if (ds.params) {
    const auto& gp = *ds.params;
    os << "[params]\n";
    for (int c = 0; c < ds.components; ++c) {
      os << "weight," << c + 1 << ',';
      put_real(os, gp.weights[c]);
      os << '\n';
    }
    for (int c = 0; c < ds.components; ++c) {
      os << "mean," << c + 1;
      for (int d = 0; d < D; ++d) {
        os << ',';
        put_real(os, gp.means[c][d]);
      }
      os << '\n';
    }
    for (int c = 0; c < ds.components; ++c) {
      os << "cov," << c + 1;
      for (int a = 0; a < D; ++a) {
        for (int b = 0; b < D; ++b) {
          os << ',';
          put_real(os, gp.covariances[c](a, b));
        }
      }
      os << '\n';
    }
  }
  os << "[points]\n";
  for (int i = 0; i < ds.size(); ++i) {
    bool first = true;
    if (ds.labels) {
      os << (*ds.labels)[i];
      first = false;
    }
    for (int d = 0; d < D; ++d) {
      if (!first) os << ',';
      put_real(os, ds.points(i, d));
      first = false;
    }
    os << '\n';
  }
  return os.str();
}

void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
  const std::string text = format_dataset(ds);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw Error("write to '" + path.string() + "' failed");
}

Dataset parse_dataset(const std::string& text) {
  LineReader r(text);
  std::string line;
  if (!r.next(line) || line != kMagic) r.fail("expected the 'QAVBDATA v1' header line");

  if (!r.next(line)) r.fail("missing section 'header'");
  auto f = split(line);
  if (f.size() != 8 || f[0] != "header") r.fail("malformed 'header' record (expected 8 fields)");
  const auto D = to_int(f[1], r, "D");
  const auto C = to_int(f[2], r, "C");
  const auto N = to_int(f[3], r, "N");
  const auto seed = to_int(f[4], r, "seed");
  if (f[5] != Rng::kRngName) r.fail("unsupported generator '" + std::string(f[5]) + "'");
  const bool has_labels = to_int(f[6], r, "has_labels") != 0;
  const bool has_params = to_int(f[7], r, "has_params") != 0;
  if (D < 1 || N < 1 || C < 0) r.fail("header has non-positive D or N, or negative C");

  Dataset ds;
  ds.components = static_cast<int>(C);
  ds.seed = static_cast<std::uint64_t>(seed);

  if (has_params) {
    if (!r.next(line) || line != "[params]") r.fail("missing section '[params]'");
    GenerativeParams gp;
    gp.weights = Eigen::VectorXd::Zero(C);
    gp.means.assign(C, Eigen::VectorXd::Zero(D));
    gp.covariances.assign(C, Eigen::MatrixXd::Zero(D, D));
    auto expect_index = [&](std::string_view field, long long want) {
      if (to_int(field, r, "component") != want) {
        r.fail("expected component index " + std::to_string(want));
      }
    };
    for (long long c = 0; c < C; ++c) {
      if (!r.next(line)) r.fail("missing section 'weight' records");
      f = split(line);
      if (f.size() != 3 || f[0] != "weight") r.fail("malformed 'weight' record");
      expect_index(f[1], c + 1);
      gp.weights[c] = to_real(f[2], r, "weight");
    }
    for (long long c = 0; c < C; ++c) {
      if (!r.next(line)) r.fail("missing section 'mean' records");
      f = split(line);
      if (static_cast<long long>(f.size()) != 2 + D || f[0] != "mean") r.fail("malformed 'mean' record");
      expect_index(f[1], c + 1);
      for (long long d = 0; d < D; ++d) gp.means[c][d] = to_real(f[2 + d], r, "mean");
    }
    for (long long c = 0; c < C; ++c) {
      if (!r.next(line)) r.fail("missing section 'cov' records");
      f = split(line);
      if (static_cast<long long>(f.size()) != 2 + D * D || f[0] != "cov") r.fail("malformed 'cov' record");
      expect_index(f[1], c + 1);
      for (long long a = 0; a < D; ++a) {
        for (long long b = 0; b < D; ++b) gp.covariances[c](a, b) = to_real(f[2 + a * D + b], r, "cov");
      }
    }
    ds.params = std::move(gp);
  }

  if (!r.next(line) || line != "[points]") r.fail("missing section '[points]'");
  ds.points.resize(N, D);
  std::vector<int> labels;
  if (has_labels) labels.resize(N);
  const long long width = D + (has_labels ? 1 : 0);
  for (long long i = 0; i < N; ++i) {
    if (!r.next(line)) {
      r.fail("missing section '[points]' rows: expected " + std::to_string(N) + " points, found " +
             std::to_string(i));
    }
    f = split(line);
    if (static_cast<long long>(f.size()) != width) {
      r.fail("point record has " + std::to_string(f.size()) + " fields, expected " + std::to_string(width));
    }
    std::size_t off = 0;
    if (has_labels) labels[i] = static_cast<int>(to_int(f[off++], r, "label"));
    for (long long d = 0; d < D; ++d) ds.points(i, d) = to_real(f[off + d], r, "coordinate");
  }
  if (r.next(line)) r.fail("unexpected trailing content");
  if (has_labels) ds.labels = std::move(labels);
  ds.validate();
  return ds;
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open dataset '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_dataset(buf.str());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

}  // namespace qavb
