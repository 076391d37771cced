// Regenerates the derived model fixtures (H3, D_B) from Q3 and the eta-quotient tables.
#include <iostream>

#include "phi4/model.hpp"
#include "phi4/modforms.hpp"
#include "phi4/pointcount.hpp"
#include "phi4/reduction.hpp"

using namespace phi4;

namespace {

json formula(std::vector<std::array<long, 2>> terms, int ap_sign) {
  json t = json::array();
  for (auto [c, pw] : terms) t.push_back({{"c", std::to_string(c)}, {"pow", pw}});
  return {{"terms", t}, {"ap_sign", ap_sign}};
}

}  // namespace

int main() {
  const auto dir = fixture_dir() / "models";
  auto q3 = model_from_json(read_json_file(dir / "Q3.json"));
  auto [h3, step] = complete_square(q3.equations[0], 0, "H3");
  h3.branch = square_normalized(*h3.branch);
  h3.vars = default_var_names(h3.branch->arity());
  json hj = model_to_json(h3);
  hj["meta"] = {{"source", "derived"},
                {"degree", 8},
                {"bad_primes", {2, 3, 13}},
                {"derivation", "t^2 = disc of Q3 in x0, content removed"},
                {"formula", formula({{1, 3}, {6, 2}, {-15, 1}, {1, 0}}, -1)},
                {"form", "13.4.a.a"},
                {"ap_window", {5, 50}},
                {"checks", json::array({{{"kind", "ap_parity_cubic"}, {"cubic", {-2, -1, 0, 1}}, {"primes", {5, 7, 11, 17, 19, 23, 29, 31, 37, 41, 43, 47}}}})}};
  write_json_file(dir / "H3.json", hj);

  // B: graph of the projections away from x1+x2 = x_i = 0, i = 0, 1, 3
  const auto& D = *h3.branch;
  const std::size_t n = D.arity();
  auto x = [&](std::size_t i) { return MultiPoly::variable(n, i); };
  const MultiPoly s = x(1) + x(2);
  auto G = lift_through_graph(D, {{x(0), s}, {x(1), s}, {x(3), s}}, {2, 2, 2, 2});
  if (!G) {
    std::cerr << "no (2,2,2,2) lift of the branch function\n";
    return 1;
  }
  auto b = model_from_json(read_json_file(dir / "B.json"));
  auto db = multiproj_model({3, 1, 1, 1}, b.equations, square_normalized(*G), "D_B");
  db.vars = b.vars;
  json dj = model_to_json(db);
  dj["meta"] = {{"source", "derived"},
                {"degree", {{1, 1, 0, 0}, {1, 0, 1, 0}, {1, 0, 0, 1}}},
                {"bad_primes", {2}},
                {"derivation", "branch G of multidegree (2,2,2,2) with G(x; x0, s; x1, s; x3, s) = branch of H3, s = x1+x2"},
                {"checks", json::array({{{"kind", "difference"}, {"other", "H3"}, {"formula", formula({{12, 2}, {-3, 1}}, 0)}, {"primes", {5, 7, 11, 13}}}})}};
  write_json_file(dir / "D_B.json", dj);
  std::cout << "H3: " << h3.branch->size() << " terms; D_B branch: " << G->size() << " terms\n";

  const std::vector<std::tuple<std::string, int, int>> tables{
      {"5.4.a.a", 4, 5}, {"6.4.a.a", 4, 6}, {"7.3.b.a", 3, 7}, {"8.3.d.a", 3, 8}, {"12.3.c.a", 3, 12}};
  for (const auto& [label, weight, level] : tables) {
    auto t = table_from_eta(label, level, *shipped_eta(weight, level), 400);
    save_newform_table(t, fixture_dir() / "tables" / (label + ".json"));
    std::cout << label << ": " << t.ap.size() << " primes\n";
  }
}
