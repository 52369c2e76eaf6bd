#include "imjet/multiindex.hpp"

#include <algorithm>

namespace imjet {

double factorial(int k) {
    double f = 1.0;
    for (int i = 2; i <= k; ++i) f *= i;
    return f;
}

std::size_t binomial(int n, int k) {
    if (k < 0 || k > n) return 0;
    k = std::min(k, n - k);
    std::size_t r = 1;
    for (int i = 1; i <= k; ++i) r = r * static_cast<std::size_t>(n - k + i) / static_cast<std::size_t>(i);
    return r;
}

std::size_t num_multisets(int d, int k) {
    if (d <= 0) return k == 0 ? 1 : 0;
    return binomial(d + k - 1, k);
}

std::vector<std::vector<int>> multisets(int d, int k) {
    std::vector<std::vector<int>> out;
    if (k == 0) {
        out.emplace_back();
        return out;
    }
    if (d <= 0) return out;
    std::vector<int> t(k, 0);
    while (true) {
        out.push_back(t);
        int pos = k - 1;
        while (pos >= 0 && t[pos] == d - 1) --pos;
        if (pos < 0) break;
        int v = t[pos] + 1;
        for (int j = pos; j < k; ++j) t[j] = v;
    }
    return out;
}

std::size_t multiset_rank(std::span<const int> tuple, int d) {
    const int k = static_cast<int>(tuple.size());
    std::size_t rank = 0;
    int lo = 0;
    for (int j = 0; j < k; ++j) {
        const int rem = k - j - 1;
        for (int v = lo; v < tuple[j]; ++v) rank += num_multisets(d - v, rem);
        lo = tuple[j];
    }
    return rank;
}

std::vector<int> exponents_of(std::span<const int> tuple, int d) {
    std::vector<int> a(d, 0);
    for (int i : tuple) ++a[i];
    return a;
}

double exponent_factorial(std::span<const int> tuple, int d) {
    double f = 1.0;
    for (int a : exponents_of(tuple, d)) f *= factorial(a);
    return f;
}

double permutation_count(std::span<const int> tuple, int d) {
    return factorial(static_cast<int>(tuple.size())) / exponent_factorial(tuple, d);
}

std::vector<Vec> simplex_lattice(int d, int k) {
    std::vector<Vec> pts;
    if (k == 0) {
        pts.push_back(Vec::Ones(d) / std::max(d, 1));
        return pts;
    }
    for (const auto& t : multisets(d, k)) {
        Vec x = Vec::Zero(d);
        for (int i : t) x[i] += 1.0 / k;
        pts.push_back(std::move(x));
    }
    return pts;
}

} // namespace imjet
