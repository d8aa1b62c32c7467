#include "capimg/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

namespace capimg::kernels {

#if defined(CAPIMG_HAVE_AVX2)
extern const KernelTable kAvx2Table;
#endif

namespace {

bool cpu_has_avx2() {
#if defined(CAPIMG_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2");
#else
    return false;
#endif
}

const KernelTable* by_name(std::string_view name) {
    if (name == "scalar") return &scalar_table();
    if (name == "avx2") return avx2_table();
    return nullptr;
}

const KernelTable* initial() {
    if (const char* env = std::getenv("CAPIMG_KERNELS")) {
        if (const auto* t = by_name(env)) return t;
    }
    if (const auto* t = avx2_table()) return t;
    return &scalar_table();
}

std::atomic<const KernelTable*>& current() {
    static std::atomic<const KernelTable*> table{initial()};
    return table;
}

}  // namespace

const KernelTable* avx2_table() {
#if defined(CAPIMG_HAVE_AVX2)
    static const bool ok = cpu_has_avx2();
    return ok ? &kAvx2Table : nullptr;
#else
    return nullptr;
#endif
}

const KernelTable& active() { return *current().load(std::memory_order_acquire); }

bool select(std::string_view name) {
    const auto* t = by_name(name);
    if (t == nullptr) return false;
    current().store(t, std::memory_order_release);
    return true;
}

std::vector<std::string_view> available() {
    std::vector<std::string_view> out{"scalar"};
    if (avx2_table() != nullptr) out.emplace_back("avx2");
    return out;
}

}  // namespace capimg::kernels
