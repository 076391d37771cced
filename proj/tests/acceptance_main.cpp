// One PASS/FAIL line per acceptance criterion; exit 0 iff all pass.
#include <iostream>
#include <memory>

#include "CLI11.hpp"
#include "phi4/acceptance.hpp"

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  bool extended = false;
  std::vector<int> only;
  std::string cache_path;
  unsigned threads = 0;
  app.add_flag("--extended", extended, "also run criterion 12 on [5,200]");
  app.add_option("--only", only, "criterion ids to run");
  app.add_option("--cache", cache_path, "count cache file");
  app.add_option("--threads", threads, "counting threads (0 = all cores)");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }
  std::unique_ptr<phi4::CountCache> cache;
  if (!cache_path.empty()) cache = std::make_unique<phi4::CountCache>(cache_path);
  phi4::AcceptanceOptions opt;
  opt.extended = extended;
  opt.only = only;
  opt.cache = cache.get();
  opt.threads = threads;
  opt.on_result = [](const phi4::CriterionResult& r) { std::cout << phi4::format_result(r) << std::endl; };
  auto results = phi4::run_acceptance(opt);
  std::size_t failed = 0;
  for (const auto& r : results) failed += !r.passed;
  std::cout << results.size() - failed << "/" << results.size() << " criteria pass" << std::endl;
  return failed ? 1 : 0;
}
