// hbs: compress operators into HBS form, sweep sizes, verify saved factorizations.
//
// Exit codes: 0 success, 1 other failure, 2 configuration error,
// 3 ill-conditioned probe matrix.

#include <hbs/hbs.hpp>

#include <CLI11.hpp>
#include <Eigen/Core>

#include <cstdint>
#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace {

constexpr int exit_other = 1;
constexpr int exit_config = 2;
constexpr int exit_ill_conditioned = 3;

struct CommonArgs {
  std::string problem;
  long long rank = 0;
  long long leaf = 0;
  long long samples = 0;
  std::uint64_t seed = 1;
  int iters = 20;
  long long block_rank = -1;
  long long height = 51;
  bool json = false;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool need_rank) {
  cmd->add_option("--problem", args.problem, "synthetic | bie-dl | bie-ntd | schur")
      ->required()
      ->check(CLI::IsMember({"synthetic", "bie-dl", "bie-ntd", "schur"}));
  auto* rank = cmd->add_option("--rank", args.rank, "basis columns per node (r)");
  auto* leaf = cmd->add_option("--leaf", args.leaf, "leaf size threshold (m)");
  if (need_rank) {
    rank->required();
    leaf->required();
  }
  cmd->add_option("--samples", args.samples, "probe columns s (default max(r + leaf, 3r))");
  cmd->add_option("--seed", args.seed, "random seed");
  cmd->add_option("--iters", args.iters, "power iterations for the error estimate")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--block-rank", args.block_rank, "block rank of the synthetic operator");
  cmd->add_option("--height", args.height, "grid height for the schur problem");
  cmd->add_flag("--json", args.json, "emit JSON instead of CSV");
}

hbs::CompressionConfig make_config(const CommonArgs& args) {
  hbs::CompressionConfig config;
  config.rank = args.rank;
  config.leaf_threshold = static_cast<std::size_t>(std::max(0LL, args.leaf));
  config.probes = args.samples;
  config.seed = hbs::RngSeed{args.seed};
  return config;
}

hbs::RunOptions make_options(const CommonArgs& args) {
  hbs::RunOptions options;
  options.power_iters = args.iters;
  if (args.block_rank >= 0) options.block_rank = args.block_rank;
  options.schur_height = args.height;
  return options;
}

std::vector<hbs::Index> parse_n_list(const std::string& text) {
  std::vector<hbs::Index> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stoll(item));
    } catch (const std::exception&) {
      throw hbs::ConfigError("bad entry '" + item + "' in --n-list");
    }
  }
  if (out.empty()) throw hbs::ConfigError("--n-list is empty");
  return out;
}

void print_records(const std::vector<hbs::RunRecord>& records, bool json) {
  if (json) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& rec : records) arr.push_back(hbs::to_json(rec));
    std::cout << arr.dump(2) << '\n';
    return;
  }
  std::cout << hbs::csv_header << '\n';
  for (const auto& rec : records) std::cout << hbs::csv_row(rec) << '\n';
}

void apply_thread_cap() {
  if (const char* env = std::getenv("HBS_THREADS")) {
    const int threads = std::atoi(env);
    if (threads > 0) Eigen::setNbThreads(threads);
  }
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Black-box HBS compression driver"};
  app.require_subcommand(1);

  CommonArgs compress_args;
  long long compress_n = 0;
  std::string save_path;
  auto* compress = app.add_subcommand("compress", "compress one operator and report metrics");
  add_common(compress, compress_args, true);
  compress->add_option("--n", compress_n, "matrix dimension")->required();
  compress->add_option("--save", save_path, "write the factorization to this file");

  CommonArgs sweep_args;
  std::string n_list;
  std::string out_path;
  auto* sweep = app.add_subcommand("sweep", "compress a sequence of sizes and write CSV");
  add_common(sweep, sweep_args, true);
  sweep->add_option("--n-list", n_list, "comma-separated ascending sizes")->required();
  sweep->add_option("--out", out_path, "CSV output path")->required();

  CommonArgs verify_args;
  long long verify_n = 0;
  std::string load_path;
  auto* verify = app.add_subcommand("verify", "recompute the error of a saved factorization");
  add_common(verify, verify_args, false);
  verify->add_option("--n", verify_n, "matrix dimension")->required();
  verify->add_option("--load", load_path, "factorization file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : exit_config;
  }

  apply_thread_cap();
  try {
    if (*compress) {
      const auto config = make_config(compress_args);
      const hbs::ProblemSpec spec{hbs::parse_problem(compress_args.problem), compress_n,
                                  config.rank, config.leaf_threshold, config.seed};
      auto result = hbs::run_once(spec, config, make_options(compress_args));
      if (!save_path.empty()) hbs::save_factorization(result.factorization, save_path);
      print_records({result.record}, compress_args.json);
    } else if (*sweep) {
      const auto config = make_config(sweep_args);
      const auto records = hbs::sweep(hbs::parse_problem(sweep_args.problem),
                                      parse_n_list(n_list), config, out_path,
                                      make_options(sweep_args));
      if (sweep_args.json) print_records(records, true);
    } else if (*verify) {
      const auto f = hbs::load_factorization(load_path);
      // The synthetic operator is regenerated from the stored rank and leaf size.
      const hbs::Index rank = verify_args.rank > 0 ? verify_args.rank : f.rank();
      const std::size_t leaf = verify_args.leaf > 0 ? static_cast<std::size_t>(verify_args.leaf)
                                                    : f.tree().leaf_threshold();
      const hbs::ProblemSpec spec{hbs::parse_problem(verify_args.problem), verify_n, rank, leaf,
                                  hbs::RngSeed{verify_args.seed}};
      const double rel_err = hbs::verify(f, spec, make_options(verify_args));
      if (verify_args.json) {
        std::cout << nlohmann::json{{"problem", verify_args.problem},
                                    {"n", verify_n},
                                    {"rel_err", rel_err}}
                         .dump(2)
                  << '\n';
      } else {
        std::cout << "problem,n,rel_err\n"
                  << verify_args.problem << ',' << verify_n << ',' << rel_err << '\n';
      }
    }
  } catch (const hbs::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return exit_config;
  } catch (const hbs::IllConditionedError& e) {
    std::cerr << "ill-conditioned probe: " << e.what() << '\n';
    return exit_ill_conditioned;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_other;
  }
  return 0;
}
