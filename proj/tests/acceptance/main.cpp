// End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
// `glass_acceptance <name>` runs a single criterion, no argument runs all.
#include "acceptance.hpp"

#include <chrono>
#include <iostream>

using namespace glass::acceptance;

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria = all_criteria();
  std::vector<const Criterion*> selected;
  if (argc < 2) {
    for (const auto& c : criteria) selected.push_back(&c);
  } else {
    for (int a = 1; a < argc; ++a) {
      const Criterion* found = nullptr;
      for (const auto& c : criteria) {
        if (c.name == argv[a]) found = &c;
      }
      if (!found) {
        std::cerr << "unknown criterion '" << argv[a] << "'; known:";
        for (const auto& c : criteria) std::cerr << ' ' << c.name;
        std::cerr << '\n';
        return 2;
      }
      selected.push_back(found);
    }
  }
  bool all_pass = true;
  for (const Criterion* c : selected) {
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = c->run();
    } catch (const std::exception& e) {
      outcome = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << (outcome.pass ? "PASS " : "FAIL ") << c->name << ": " << outcome.detail << " [" << secs << " s]"
              << std::endl;
    all_pass = all_pass && outcome.pass;
  }
  return all_pass ? 0 : 1;
}
