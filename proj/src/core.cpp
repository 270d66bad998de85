#include "ivbounds/core.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace ivbounds {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::ZeroArm: return "ZeroArm";
    case ErrorKind::SizeOverflow: return "SizeOverflow";
    case ErrorKind::LpFailure: return "LpFailure";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::DomainError: return "DomainError";
    case ErrorKind::ParseError: return "ParseError";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(message), kind_(kind) {}

Dims Dims::make(int Q, int K, int M) {
  if (Q < 1 || K < 2 || M < 2) {
    std::ostringstream os;
    os << "invalid dims (Q=" << Q << ", K=" << K << ", M=" << M
       << "): need Q >= 1, K >= 2, M >= 2";
    throw Error(ErrorKind::InvalidArgument, os.str());
  }
  Dims d;
  d.Q = Q;
  d.K = K;
  d.M = M;
  // M^K must be addressable.
  std::size_t s = 1;
  for (int k = 0; k < K; ++k) {
    if (s > std::numeric_limits<std::size_t>::max() / static_cast<std::size_t>(M)) {
      throw Error(ErrorKind::SizeOverflow, "M^K does not fit in a machine word");
    }
    s *= static_cast<std::size_t>(M);
  }
  return d;
}

std::size_t Dims::strata() const {
  std::size_t s = 1;
  for (int k = 0; k < K; ++k) s *= static_cast<std::size_t>(M);
  return s;
}

std::size_t cell_flat(const Dims& dims, CellIndex cell) {
  if (cell.x < 1 || cell.x > dims.K || cell.y < 1 || cell.y > dims.M) {
    throw Error(ErrorKind::DomainError, "cell index out of range");
  }
  return static_cast<std::size_t>(cell.x - 1) * static_cast<std::size_t>(dims.M) +
         static_cast<std::size_t>(cell.y - 1);
}

CellIndex cell_from_flat(const Dims& dims, std::size_t flat) {
  if (flat >= dims.cells()) throw Error(ErrorKind::DomainError, "cell flat index out of range");
  const auto m = static_cast<std::size_t>(dims.M);
  return CellIndex{static_cast<int>(flat / m) + 1, static_cast<int>(flat % m) + 1};
}

std::size_t stratum_flat(const Dims& dims, std::span<const int> outcomes) {
  if (outcomes.size() != static_cast<std::size_t>(dims.K)) {
    throw Error(ErrorKind::DimensionMismatch, "stratum needs exactly K outcomes");
  }
  std::size_t flat = 0;
  for (int y : outcomes) {
    if (y < 1 || y > dims.M) throw Error(ErrorKind::DomainError, "stratum outcome out of range");
    flat = flat * static_cast<std::size_t>(dims.M) + static_cast<std::size_t>(y - 1);
  }
  return flat;
}

StratumIndex stratum_from_flat(const Dims& dims, std::size_t flat) {
  if (flat >= dims.strata()) throw Error(ErrorKind::DomainError, "stratum flat index out of range");
  StratumIndex s;
  s.outcomes.assign(static_cast<std::size_t>(dims.K), 1);
  const auto m = static_cast<std::size_t>(dims.M);
  for (int k = dims.K - 1; k >= 0; --k) {
    s.outcomes[static_cast<std::size_t>(k)] = static_cast<int>(flat % m) + 1;
    flat /= m;
  }
  return s;
}

int stratum_outcome(const Dims& dims, std::size_t flat, int x) {
  const auto m = static_cast<std::size_t>(dims.M);
  for (int k = dims.K; k > x; --k) flat /= m;
  return static_cast<int>(flat % m) + 1;
}

IndexRoundtripReport index_roundtrip(const Dims& dims) {
  IndexRoundtripReport report;
  for (std::size_t f = 0; f < dims.strata(); ++f) {
    const StratumIndex s = stratum_from_flat(dims, f);
    bool ok = stratum_flat(dims, s) == f;
    for (int x = 1; x <= dims.K && ok; ++x) {
      ok = stratum_outcome(dims, f, x) == s.outcomes[static_cast<std::size_t>(x - 1)];
    }
    if (!ok) {
      report.ok = false;
      report.failures.push_back("stratum " + std::to_string(f));
    }
    ++report.strata_checked;
  }
  for (std::size_t f = 0; f < dims.cells(); ++f) {
    if (cell_flat(dims, cell_from_flat(dims, f)) != f) {
      report.ok = false;
      report.failures.push_back("cell " + std::to_string(f));
    }
    ++report.cells_checked;
  }
  return report;
}

namespace {

void validate_simplex(std::span<const double> probs, std::size_t expected, const char* what) {
  if (probs.size() != expected) {
    throw Error(ErrorKind::DimensionMismatch, std::string(what) + ": wrong vector length");
  }
  double sum = 0.0;
  for (double p : probs) {
    if (!std::isfinite(p) || p < 0.0) {
      throw Error(ErrorKind::DomainError, std::string(what) + ": negative or non-finite entry");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > kProbabilitySumTolerance) {
    throw Error(ErrorKind::DomainError, std::string(what) + ": entries do not sum to 1");
  }
}

}  // namespace

void ObservedDistribution::validate(const Dims& dims) const {
  if (arm < 1 || arm > dims.Q) throw Error(ErrorKind::DomainError, "observed distribution arm out of range");
  validate_simplex(probs, dims.cells(), "ObservedDistribution");
}

void CounterfactualDistribution::validate(const Dims& dims) const {
  validate_simplex(probs, dims.strata(), "CounterfactualDistribution");
}

}  // namespace ivbounds
