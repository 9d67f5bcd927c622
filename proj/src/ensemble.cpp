#include "portopt/ensemble.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <mutex>
#include <ostream>
#include <thread>

#include "portopt/parallel.hpp"
#include "portopt/report.hpp"
#include "portopt/rng.hpp"

namespace portopt {

int worker_count() {
    if (const char* env = std::getenv("PORTOPT_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1) return static_cast<int>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

void parallel_for(int64_t n, const std::function<void(int64_t, int64_t)>& fn) {
    if (n <= 0) return;
    const int workers = std::min<int64_t>(worker_count(), n);
    if (workers <= 1) {
        fn(0, n);
        return;
    }
    std::atomic<int64_t> next{0};
    const int64_t chunk = std::max<int64_t>(1, n / (workers * 8));
    std::vector<std::thread> pool;
    pool.reserve(workers);
    std::exception_ptr error;
    std::mutex error_mutex;
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const int64_t begin = next.fetch_add(chunk);
                if (begin >= n) return;
                try {
                    fn(begin, std::min(begin + chunk, n));
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

Path simulate_brownian_member(TimeGrid grid, int dim, uint64_t seed, uint64_t member) {
    const int K = grid.steps;
    const double sqrt_dt = std::sqrt(grid.dt());
    const rng::Key key = rng::key_from_seed(seed);
    const uint64_t stream = rng::outer_stream(member);

    std::vector<double> normals(static_cast<std::size_t>(K) * dim);
    rng::fill_normals(key, stream, 0, normals);

    std::vector<double> levels(static_cast<std::size_t>(K + 1) * dim, 0.0);
    for (int k = 0; k < K; ++k) {
        const std::size_t row = static_cast<std::size_t>(k) * dim;
        for (int i = 0; i < dim; ++i)
            levels[row + dim + i] = levels[row + i] + sqrt_dt * normals[row + i];
    }
    Path path(grid, dim, std::move(levels));
    path.set_provenance(member);
    return path;
}

PathEnsemble simulate_brownian(TimeGrid grid, int dim, int n_paths, uint64_t seed) {
    if (dim < 1) throw InvalidArgument("simulate_brownian: dim must be positive");
    if (n_paths < 1) throw InvalidArgument("simulate_brownian: n_paths must be positive");

    std::vector<Path> members(static_cast<std::size_t>(n_paths), Path(grid, dim));
    parallel_for(n_paths, [&](int64_t begin, int64_t end) {
        for (int64_t j = begin; j < end; ++j)
            members[j] = simulate_brownian_member(grid, dim, seed, static_cast<uint64_t>(j));
    });
    return PathEnsemble(grid, dim, seed, std::move(members));
}

void write_paths_csv(std::ostream& os, const PathEnsemble& ensemble) {
    os << "path_id,node_index,time";
    for (int i = 1; i <= ensemble.dim(); ++i) os << ",w_" << i;
    os << "\n";
    for (int j = 0; j < ensemble.size(); ++j) {
        const Path& p = ensemble.member(j);
        for (int k = 0; k < p.nodes(); ++k) {
            os << j << "," << k << "," << format_number(p.grid().time(k));
            for (int i = 0; i < p.dim(); ++i) os << "," << format_number(p.value(k, i));
            os << "\n";
        }
    }
}

}  // namespace portopt
