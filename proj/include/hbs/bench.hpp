#pragma once
//
// Measurement driver: build an operator, compress it, and record sampling
// time, compression time, apply time, relative error, storage and probe
// counts. Records are written as CSV (one flushed row per run) or JSON.
//

#include <hbs/compressor.hpp>
#include <hbs/error.hpp>
#include <hbs/factorization.hpp>
#include <hbs/linalg.hpp>
#include <hbs/operators.hpp>
#include <hbs/oracle.hpp>

#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace hbs {

enum class Problem { synthetic, bie_dl, bie_ntd, schur };

inline std::string_view to_string(Problem p) {
  switch (p) {
  case Problem::synthetic: return "synthetic";
  case Problem::bie_dl: return "bie-dl";
  case Problem::bie_ntd: return "bie-ntd";
  case Problem::schur: return "schur";
  }
  return "unknown";
}

inline Problem parse_problem(std::string_view name) {
  if (name == "synthetic") return Problem::synthetic;
  if (name == "bie-dl") return Problem::bie_dl;
  if (name == "bie-ntd") return Problem::bie_ntd;
  if (name == "schur") return Problem::schur;
  throw ConfigError("unknown problem '" + std::string(name) + "'");
}

struct RunOptions {
  /// Power iterations for the relative error estimate.
  int power_iters = 20;
  /// Block rank of the synthetic operator; defaults to max(1, rank - 5).
  std::optional<Index> block_rank;
  /// Grid height for the Schur problem.
  Index schur_height = 51;
  /// Vectors averaged for t_apply.
  int apply_reps = 3;
};

/// Operator parameters that must match between a compression run and a
/// later verification of its output.
struct ProblemSpec {
  Problem problem = Problem::synthetic;
  Index n = 0;
  Index rank = 0;
  std::size_t leaf_threshold = 0;
  RngSeed seed{};
};

inline Index synthetic_block_rank(const ProblemSpec& spec, const RunOptions& options) {
  return options.block_rank.value_or(std::max<Index>(1, spec.rank - 5));
}

inline MatVecOracle make_oracle(const ProblemSpec& spec, const RunOptions& options = {}) {
  switch (spec.problem) {
  case Problem::synthetic: {
    ClusterTree tree;
    try {
      tree = build_tree(static_cast<std::size_t>(spec.n), spec.leaf_threshold);
    } catch (const DimensionError& e) {
      throw ConfigError(e.what());
    }
    const Index k = synthetic_block_rank(spec, options);
    if (k > static_cast<Index>(tree.min_leaf_size()))
      throw ConfigError("synthetic block rank exceeds leaf size");
    return hbs_oracle(random_hbs(tree, k, spec.seed));
  }
  case Problem::bie_dl: return bie_oracle(spec.n, default_contour());
  case Problem::bie_ntd: return ntd_oracle(spec.n, default_contour());
  case Problem::schur: return schur_oracle(spec.n, options.schur_height);
  }
  throw ConfigError("unknown problem");
}

struct RunRecord {
  Problem problem = Problem::synthetic;
  Index n = 0;
  Index r = 0;
  std::size_t m = 0;
  Index s = 0;
  std::uint64_t seed = 0;
  double t_sample = 0.0;
  double t_compress = 0.0;
  double t_apply = 0.0;
  double rel_err = 0.0;
  double floats_per_dof = 0.0;
  std::uint64_t matvecs_a = 0;
  std::uint64_t matvecs_at = 0;
  /// Multiply-adds after sampling (not part of the CSV schema).
  std::uint64_t compress_madds = 0;
};

struct RunResult {
  RunRecord record;
  HbsFactorization factorization;
};

/// ||A - F|| / ||A|| by power iteration, F applied through its fast apply.
inline double relative_error(const MatVecOracle& oracle, const HbsFactorization& f, int iters,
                             RngSeed seed) {
  const LinearMap e = [&](const Vector& x) -> Vector {
    return oracle.apply(x).col(0) - apply(f, x);
  };
  const LinearMap et = [&](const Vector& x) -> Vector {
    return oracle.apply_transpose(x).col(0) - apply_transpose(f, x);
  };
  return power_method_relnorm(e, et, oracle.as_map(), oracle.as_transpose_map(), oracle.n(),
                              iters, seed);
}

namespace detail {

inline double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

} // namespace detail

/// Compresses one operator and measures it.
inline RunResult run_once(const ProblemSpec& spec, const CompressionConfig& config,
                          const RunOptions& options = {}) {
  using clock = std::chrono::steady_clock;
  const MatVecOracle oracle = make_oracle(spec, options);

  ClusterTree tree;
  try {
    tree = build_tree(static_cast<std::size_t>(spec.n), config.leaf_threshold);
  } catch (const DimensionError& e) {
    throw ConfigError(e.what());
  }
  const Index s = validate_config(config, tree);

  auto start = clock::now();
  const SampleSet samples = draw_samples(oracle, s, config.seed);
  const double t_sample = detail::seconds_since(start);
  const auto counts = oracle.counts();

  OpCounter ops;
  start = clock::now();
  HbsFactorization f = compress_samples(samples, tree, config, &ops);
  const double t_compress = detail::seconds_since(start);

  const DenseMatrix probe = gaussian_matrix(spec.n, options.apply_reps, config.seed, 3);
  start = clock::now();
  for (Index j = 0; j < probe.cols(); ++j) {
    const Vector out = apply(f, probe.col(j));
    if (!out.allFinite()) throw Error("non-finite output from compressed apply");
  }
  const double t_apply = detail::seconds_since(start) / static_cast<double>(probe.cols());

  RunRecord rec;
  rec.problem = spec.problem;
  rec.n = spec.n;
  rec.r = config.rank;
  rec.m = config.leaf_threshold;
  rec.s = s;
  rec.seed = config.seed.value;
  rec.t_sample = t_sample;
  rec.t_compress = t_compress;
  rec.t_apply = t_apply;
  rec.matvecs_a = counts.a;
  rec.matvecs_at = counts.at;
  rec.compress_madds = ops.madds;
  rec.floats_per_dof = storage(f).floats_per_dof;
  rec.rel_err = relative_error(oracle, f, options.power_iters, config.seed);
  return {rec, std::move(f)};
}

inline constexpr std::string_view csv_header =
    "problem,n,r,m,s,seed,t_sample,t_compress,t_apply,rel_err,floats_per_dof,matvecs_a,"
    "matvecs_at";

inline std::string csv_row(const RunRecord& rec) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), "%s,%lld,%lld,%zu,%lld,%llu,%.6e,%.6e,%.6e,%.17g,%.17g,%llu,%llu",
                std::string(to_string(rec.problem)).c_str(), static_cast<long long>(rec.n),
                static_cast<long long>(rec.r), rec.m, static_cast<long long>(rec.s),
                static_cast<unsigned long long>(rec.seed), rec.t_sample, rec.t_compress,
                rec.t_apply, rec.rel_err, rec.floats_per_dof,
                static_cast<unsigned long long>(rec.matvecs_a),
                static_cast<unsigned long long>(rec.matvecs_at));
  return buf;
}

inline nlohmann::json to_json(const RunRecord& rec) {
  return {{"problem", to_string(rec.problem)},
          {"n", rec.n},
          {"r", rec.r},
          {"m", rec.m},
          {"s", rec.s},
          {"seed", rec.seed},
          {"t_sample", rec.t_sample},
          {"t_compress", rec.t_compress},
          {"t_apply", rec.t_apply},
          {"rel_err", rec.rel_err},
          {"floats_per_dof", rec.floats_per_dof},
          {"matvecs_a", rec.matvecs_a},
          {"matvecs_at", rec.matvecs_at}};
}

/// Runs every size in n_list and appends one CSV row per run to out_path,
/// flushing after each row so completed rows survive a later failure.
inline std::vector<RunRecord> sweep(Problem problem, const std::vector<Index>& n_list,
                                    const CompressionConfig& config,
                                    const std::filesystem::path& out_path,
                                    const RunOptions& options = {}) {
  for (std::size_t i = 1; i < n_list.size(); ++i)
    if (n_list[i] <= n_list[i - 1]) throw ConfigError("n list must be strictly ascending");

  std::ofstream out(out_path, std::ios::trunc);
  if (!out) throw Error("cannot open " + out_path.string() + " for writing");
  out << csv_header << '\n' << std::flush;

  std::vector<RunRecord> records;
  for (const Index n : n_list) {
    const ProblemSpec spec{problem, n, config.rank, config.leaf_threshold, config.seed};
    records.push_back(run_once(spec, config, options).record);
    out << csv_row(records.back()) << '\n' << std::flush;
    if (!out) throw Error("write to " + out_path.string() + " failed");
  }
  return records;
}

/// Relative error of a stored factorization against a freshly built operator.
inline double verify(const HbsFactorization& f, const ProblemSpec& spec,
                     const RunOptions& options = {}) {
  if (f.n() != spec.n)
    throw ConfigError("factorization has n = " + std::to_string(f.n()) + ", problem has n = " +
                      std::to_string(spec.n));
  const MatVecOracle oracle = make_oracle(spec, options);
  return relative_error(oracle, f, options.power_iters, spec.seed);
}

} // namespace hbs
