// Writes a synthetic demo corpus (JSONL) for exercising the pipeline.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "adtheme/corpus.hpp"
#include "adtheme/synthgen.hpp"

using namespace adtheme;

int main(int argc, char** argv) {
  CLI::App app{"synthetic corpus generator"};
  std::string out = "corpus.jsonl";
  std::string kind = "toy";
  std::uint64_t seed = 7;
  int n = 60;
  int d_x = 16;
  int classes = 16;
  app.add_option("--out", out, "output JSONL path")->capture_default_str();
  app.add_option("--kind", kind, "toy | overfit | crossmodal | ranking")->capture_default_str();
  app.add_option("--seed", seed, "generator seed")->capture_default_str();
  app.add_option("--n", n, "instance count")->capture_default_str();
  app.add_option("--dx", d_x, "RoI feature width (toy/overfit)")->capture_default_str();
  app.add_option("--classes", classes, "class/topic count")->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  try {
    Corpus corpus;
    if (kind == "toy")
      corpus = make_toy_corpus(seed, n, d_x);
    else if (kind == "overfit")
      corpus = make_overfit_corpus(seed, n, classes, d_x);
    else if (kind == "crossmodal")
      corpus = make_crossmodal_corpus(seed, n, classes);
    else if (kind == "ranking")
      corpus = make_ranking_corpus(seed, n, classes);
    else {
      std::cerr << "unknown --kind '" << kind << "'\n";
      return 1;
    }
    save_corpus(corpus, out);
    std::cout << "wrote " << corpus.size() << " instances to " << out << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
