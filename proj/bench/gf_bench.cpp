// Throughput comparison for the GF(256) encode kernel: shift-and-reduce
// reference, table-driven serial, and the OpenMP row fan-out. Verifies the
// three outputs are bitwise identical before reporting. --smoke shrinks the
// workload so the binary can double as a build check.
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <functional>
#include <string>
#include <vector>

#include "qcs/rlnc.hpp"
#include "qcs/rng.hpp"

#include "gf256_ref.hpp"

using namespace qcs;

namespace {

using Chunks = std::vector<std::vector<uint8_t>>;

double bench(const char* name, size_t work_bytes, const Chunks& expect,
             const std::function<Chunks()>& fn) {
    // One warm-up pass, then the timed pass.
    if (fn() != expect) {
        std::printf("%-18s OUTPUT MISMATCH\n", name);
        return -1.0;
    }
    const auto t0 = std::chrono::steady_clock::now();
    const auto out = fn();
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (out != expect) {
        std::printf("%-18s OUTPUT MISMATCH\n", name);
        return -1.0;
    }
    std::printf("%-18s %8.3f ms  %9.1f MB/s\n", name, secs * 1e3,
                static_cast<double>(work_bytes) / 1e6 / secs);
    return secs;
}

} // namespace

int main(int argc, char** argv) {
    const bool smoke = argc > 1 && std::string(argv[1]) == "--smoke";
    const size_t k = smoke ? 4 : 16;
    const size_t len = smoke ? 4096 : (1u << 18);
    const size_t rows = smoke ? 8 : 24;

    SplitMix64 rng(99);
    Chunks sources(k);
    for (auto& s : sources) {
        s.resize(len);
        for (auto& b : s)
            b = static_cast<uint8_t>(rng.next());
    }
    Chunks coeffs(rows);
    for (auto& c : coeffs) {
        c.resize(k);
        for (auto& b : c)
            b = static_cast<uint8_t>(rng.next());
    }

    // Every implementation touches rows x k x len source bytes.
    const size_t work = rows * k * len;
    std::printf("encode kernel: k=%zu chunks x %zu bytes, %zu output rows (%zu MB of multiplies)\n",
                k, len, rows, work / 1000000);

    const Chunks expect = ref::encode_naive(sources, coeffs);
    bool ok = true;
    ok &= bench("shift-and-reduce", work, expect,
                [&] { return ref::encode_naive(sources, coeffs); }) >= 0;
    ok &= bench("table serial", work, expect,
                [&] { return rlnc::combine(sources, coeffs, false); }) >= 0;
    ok &= bench("table openmp", work, expect,
                [&] { return rlnc::combine(sources, coeffs, true); }) >= 0;
    return ok ? 0 : 1;
}
