#include <benchmark/benchmark.h>

#include <random>

#include "gapscan/imps.hpp"
#include "gapscan/ipeps.hpp"
#include "gapscan/models.hpp"
#include "gapscan/tensor.hpp"

namespace {

gapscan::RealTensor random_tensor(std::vector<gapscan::Index> shape, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::size_t n = 1;
  for (const auto& i : shape) n *= i.dim;
  std::vector<double> v(n);
  for (auto& x : v) x = normal(rng);
  return gapscan::RealTensor(std::move(shape), std::move(v));
}

void BM_Contract(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  const auto a = random_tensor({{"a", d}, {"b", d}, {"c", d}}, 1);
  const auto b = random_tensor({{"c", d}, {"b", d}, {"e", d}}, 2);
  for (auto _ : state) benchmark::DoNotOptimize(gapscan::contract(a, b, {{"b", "b"}, {"c", "c"}}));
}
BENCHMARK(BM_Contract)->Arg(8)->Arg(16)->Arg(32);

void BM_SvdTruncate(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  const auto t = random_tensor({{"l", d}, {"p", 2}, {"q", 2}, {"r", d}}, 3);
  for (auto _ : state) benchmark::DoNotOptimize(gapscan::svd_truncate(t, {"l", "p"}, d, 1e-12));
}
BENCHMARK(BM_SvdTruncate)->Arg(8)->Arg(16)->Arg(32);

// Grows a 2D checkerboard state to bond dimension D, then times one bond update.
void BM_SimpleUpdate2D(benchmark::State& state) {
  const auto dmax = static_cast<std::size_t>(state.range(0));
  const gapscan::Model model = gapscan::make_tfim_model(2, 0.5, 1.0);
  const gapscan::RMatrix gate =
      gapscan::expm_symmetric(gapscan::checkerboard_bond_hamiltonian(model, 0), -0.1);
  auto s = gapscan::random_product_ipeps(model.lattice.with_unit_cell(gapscan::UnitCell::Checkerboard), 2, 5);
  for (int sweep = 0; sweep < 6; ++sweep)
    for (std::size_t b = 0; b < s.bonds.size(); ++b) s = gapscan::simple_update_bond(s, gate, b, dmax).state;
  for (auto _ : state) benchmark::DoNotOptimize(gapscan::simple_update_bond(s, gate, 0, dmax));
}
BENCHMARK(BM_SimpleUpdate2D)->Arg(2)->Arg(3)->Arg(4)->Arg(6);

void BM_TebdStep(benchmark::State& state) {
  const auto dmax = static_cast<std::size_t>(state.range(0));
  const gapscan::Model model = gapscan::make_haldane_model();
  const gapscan::RMatrix gate =
      gapscan::expm_symmetric(gapscan::bond_hamiltonian_1d(model.hamiltonian), -0.05);
  auto s = gapscan::random_product_imps(3, 7);
  for (int n = 0; n < 60; ++n) {
    s = gapscan::tebd_step(s, gate, gapscan::Sublattice::A, dmax).state;
    s = gapscan::tebd_step(s, gate, gapscan::Sublattice::B, dmax).state;
  }
  for (auto _ : state) benchmark::DoNotOptimize(gapscan::tebd_step(s, gate, gapscan::Sublattice::A, dmax));
}
BENCHMARK(BM_TebdStep)->Arg(8)->Arg(16)->Arg(32);

}  // namespace

BENCHMARK_MAIN();
