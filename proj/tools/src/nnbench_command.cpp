#include <cstdio>
#include <random>

#include "cloudsample/nnsearch.hpp"
#include "commands.hpp"
#include "methods.hpp"

namespace cloudsample::cli {

namespace {

PointCloud uniform_cloud(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> coord(-1.0f, 1.0f);
  PointMatrix points(static_cast<Eigen::Index>(n), 3);
  for (Eigen::Index i = 0; i < points.size(); ++i) points.data()[i] = coord(rng);
  return PointCloud(std::move(points));
}

NeighborTable search(SearchBackend backend, const PointCloud& cloud, std::size_t k,
                     double radius) {
  if (backend == SearchBackend::KdTree) return nn::KdTree(cloud).knn(cloud, k);
  return nn::find_neighbors(cloud, backend, k, radius);
}

}  // namespace

int run_nnbench(const NnBenchArgs& args, std::ostream& out) {
  if (args.repeats < 1) throw Error(Errc::InvalidConfig, "--repeats must be >= 1");
  if (!(args.radius > 0)) throw Error(Errc::InvalidConfig, "--radius must be > 0");
  std::vector<SearchBackend> backends;
  for (const auto& name : args.backends) backends.push_back(parse_backend(name));

  bool kdtree_ok = true;
  out << "n,k,backend,t_s,match\n";
  for (const std::size_t n : args.sizes) {
    if (n < 1) throw Error(Errc::InvalidConfig, "--n entries must be >= 1");
    const PointCloud cloud = uniform_cloud(n, args.seed + n);
    for (const std::size_t k : args.ks) {
      const NeighborTable reference = nn::knn_bruteforce(cloud, k);
      for (const SearchBackend backend : backends) {
        std::vector<double> times;
        NeighborTable table;
        for (std::size_t r = 0; r < args.repeats; ++r) {
          const auto start = Clock::now();
          table = search(backend, cloud, k, args.radius);
          times.push_back(seconds_since(start));
        }
        const bool match = table == reference;
        if (backend == SearchBackend::KdTree && !match) kdtree_ok = false;
        char t[32];
        std::snprintf(t, sizeof t, "%.6f", median(times));
        out << n << ',' << k << ',' << to_string(backend) << ',' << t << ','
            << (match ? "true" : "false") << '\n';
      }
    }
  }
  return kdtree_ok ? 0 : 1;
}

}  // namespace cloudsample::cli
