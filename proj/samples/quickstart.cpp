// Guided search against matched-budget random search on a generated landscape.
#include <gdbo/gdbo.hpp>

#include <cstdio>

int main() {
  using namespace gdbo;
  GeometryParams g;
  g.n_points = 5000;
  g.seed = 3;
  const auto space = generate_geometry_landscape(g).space;

  RunConfig c;
  c.T = 15;
  c.N = 64;
  c.K = 8;
  c.n_init = 8;
  c.audit_m = 500;
  c.noise = NoiseModel::gaussian(0.01);
  c.beta = 20;
  // surrogate within 0.05 of the true utility everywhere
  c.learner.kind = LearnerSpec::Kind::oracle;
  c.learner.oracle_error = 0.05;

  std::vector<RunResult> guided, random;
  for (std::uint64_t s = 1; s <= 5; ++s) {
    guided.push_back(run_gdbo(space, c, s));
    random.push_back(run_random_search(space, c.K + c.J, c.T, c.noise, s, c.n_init));
  }
  const auto a = diag::regret_curve(guided), b = diag::regret_curve(random);
  std::printf("%5s %12s %12s\n", "round", "guided", "random");
  for (std::size_t t = 0; t < a.T(); ++t) std::printf("%5zu %12.4g %12.4g\n", t + 1, a.mean_gap[t], b.mean_gap[t]);
}
