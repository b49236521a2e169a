#include "fmprune/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "fmprune/error.hpp"
#include "fmprune/util.hpp"

namespace fmprune::stats {

SimilarityMatrix::SimilarityMatrix(std::string layer_id, std::vector<std::size_t> channel_ids,
                                   std::vector<double> values)
    : layer_id_(std::move(layer_id)), channel_ids_(std::move(channel_ids)), values_(std::move(values)) {
    if (values_.size() != channel_ids_.size() * channel_ids_.size())
        fail(ErrorCode::invalid_argument, "similarity matrix must be square");
}

SimilarityMatrix SimilarityMatrix::restrict_to(std::span<const std::size_t> rows) const {
    std::vector<std::size_t> ids;
    std::vector<double> vals;
    ids.reserve(rows.size());
    vals.reserve(rows.size() * rows.size());
    for (auto r : rows) {
        if (r >= size()) fail(ErrorCode::invalid_argument, "restrict_to: row out of range");
        ids.push_back(channel_ids_[r]);
        for (auto c : rows) vals.push_back(at(r, c));
    }
    return {layer_id_, std::move(ids), std::move(vals)};
}

std::vector<double> compute_m_std(const tensorio::ActivationSet& acts) {
    const std::size_t hw = acts.spatial();
    if (hw < 2)
        fail(ErrorCode::degenerate_spatial,
             "layer '" + acts.layer_id + "': M-std needs at least two spatial positions (got 1x1 maps)");
    const double denom = static_cast<double>(hw - 1);
    std::vector<double> out(acts.channels, 0.0);
    for (std::size_t j = 0; j < acts.channels; ++j) {
        double acc = 0.0;
        for (std::size_t m = 0; m < acts.samples; ++m) {
            const auto x = acts.map(m, j);
            // shifted by the first element so constant maps give exactly zero
            const double shift = x[0];
            double sum = 0.0;
            for (double v : x) sum += v - shift;
            const double mean = sum / static_cast<double>(hw);
            double ss = 0.0;
            for (double v : x) ss += (v - shift - mean) * (v - shift - mean);
            acc += std::sqrt(ss / denom);
        }
        out[j] = acc / static_cast<double>(acts.samples);
    }
    return out;
}

SimilarityMatrix compute_similarity_matrix(const tensorio::ActivationSet& acts, unsigned threads) {
    const std::size_t n = acts.channels, t = acts.samples;
    std::vector<double> norms(t * n);
    for (std::size_t m = 0; m < t; ++m)
        for (std::size_t j = 0; j < n; ++j) {
            const auto x = acts.map(m, j);
            norms[m * n + j] = std::sqrt(std::inner_product(x.begin(), x.end(), x.begin(), 0.0));
        }

    std::vector<double> values(n * n, 0.0);
    const double inv_t = 1.0 / static_cast<double>(t);
    parallel_for(n, threads, [&](std::size_t j) {
        double self = 0.0;
        for (std::size_t m = 0; m < t; ++m)
            if (norms[m * n + j] > 0.0) self += 1.0;
        values[j * n + j] = self * inv_t;
        for (std::size_t p = j + 1; p < n; ++p) {
            double acc = 0.0;
            for (std::size_t m = 0; m < t; ++m) {
                const double nj = norms[m * n + j], np = norms[m * n + p];
                if (nj == 0.0 || np == 0.0) continue;
                const auto a = acts.map(m, j), b = acts.map(m, p);
                const double dot = std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
                acc += std::min(1.0, std::abs(dot) / (nj * np));
            }
            values[j * n + p] = values[p * n + j] = acc * inv_t;
        }
    });

    std::vector<std::size_t> ids(n);
    std::iota(ids.begin(), ids.end(), std::size_t{0});
    return {acts.layer_id, std::move(ids), std::move(values)};
}

std::vector<double> compute_m_corr(const SimilarityMatrix& sim) {
    const std::size_t n = sim.size();
    std::vector<double> out(n, 0.0);
    std::vector<double> row(n);
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t p = 0; p < n; ++p) row[p] = sim.at(j, p);
        std::sort(row.begin(), row.end());
        out[j] = std::accumulate(row.begin(), row.end(), 0.0) / static_cast<double>(n);
    }
    return out;
}

std::vector<double> compute_topk_corr(const SimilarityMatrix& sim, std::size_t k) {
    const std::size_t n = sim.size();
    if (k == 0 || k + 1 > n)
        fail(ErrorCode::k_too_large, "layer '" + sim.layer_id() + "': top-k needs 1 <= k <= " +
                                         std::to_string(n == 0 ? 0 : n - 1) + ", got k=" + std::to_string(k));
    std::vector<double> out(n, 0.0);
    std::vector<std::size_t> partners;
    for (std::size_t j = 0; j < n; ++j) {
        partners.clear();
        for (std::size_t p = 0; p < n; ++p)
            if (p != j) partners.push_back(p);
        std::partial_sort(partners.begin(), partners.begin() + static_cast<std::ptrdiff_t>(k), partners.end(),
                          [&](std::size_t a, std::size_t b) {
                              const double va = sim.at(j, a), vb = sim.at(j, b);
                              return va != vb ? va > vb : a < b;
                          });
        double acc = 0.0;
        for (std::size_t i = 0; i < k; ++i) acc += sim.at(j, partners[i]);
        out[j] = acc / static_cast<double>(k);
    }
    return out;
}

LayerStatistics compute_layer_statistics(const tensorio::ActivationSet& acts, std::size_t k, unsigned threads) {
    LayerStatistics out;
    out.stats.layer_id = acts.layer_id;
    out.stats.m_std = compute_m_std(acts);
    out.similarity = compute_similarity_matrix(acts, threads);
    out.stats.m_corr = compute_m_corr(out.similarity);
    if (acts.channels >= 2 && k >= 1) {
        out.stats.k = std::min(k, acts.channels - 1);
        out.stats.topk_corr = compute_topk_corr(out.similarity, out.stats.k);
    }
    return out;
}

double pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) fail(ErrorCode::invalid_argument, "pearson: length mismatch");
    const std::size_t n = x.size();
    if (n < 2) return std::numeric_limits<double>::quiet_NaN();
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) return std::numeric_limits<double>::quiet_NaN();
    return sxy / std::sqrt(sxx * syy);
}

namespace {

double mean_of(std::span<const double> v) {
    return v.empty() ? std::numeric_limits<double>::quiet_NaN()
                     : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

struct Pooled {
    std::vector<double> m_std, m_corr, topk_std, topk;
};

Pooled pool(std::span<const FeatureStats> stats) {
    Pooled p;
    for (const auto& s : stats) {
        p.m_std.insert(p.m_std.end(), s.m_std.begin(), s.m_std.end());
        p.m_corr.insert(p.m_corr.end(), s.m_corr.begin(), s.m_corr.end());
        if (s.topk_corr) {
            p.topk_std.insert(p.topk_std.end(), s.m_std.begin(), s.m_std.end());
            p.topk.insert(p.topk.end(), s.topk_corr->begin(), s.topk_corr->end());
        }
    }
    return p;
}

void check_nonempty(std::span<const FeatureStats> stats) {
    if (stats.empty()) fail(ErrorCode::invalid_argument, "stats report needs at least one layer");
    for (const auto& s : stats)
        if (s.m_corr.size() != s.m_std.size() || (s.topk_corr && s.topk_corr->size() != s.m_std.size()))
            fail(ErrorCode::invalid_argument, "layer '" + s.layer_id + "': statistic vectors differ in length");
}

}  // namespace

std::string stats_report_csv(std::span<const FeatureStats> stats) {
    check_nonempty(stats);
    std::string out = "layer_id,channel,m_std,m_corr,topk_corr\n";
    for (const auto& s : stats) {
        for (std::size_t j = 0; j < s.channels(); ++j) {
            out += s.layer_id + "," + std::to_string(j) + "," + format_sig(s.m_std[j]) + "," + format_sig(s.m_corr[j]) +
                   "," + (s.topk_corr ? format_sig((*s.topk_corr)[j]) : std::string()) + "\n";
        }
        out += s.layer_id + ",ALL," + format_sig(mean_of(s.m_std)) + "," + format_sig(mean_of(s.m_corr)) + "," +
               (s.topk_corr ? format_sig(mean_of(*s.topk_corr)) : std::string()) + "\n";
    }
    const Pooled p = pool(stats);
    out += "GLOBAL_PEARSON,ALL," + format_sig(pearson(p.m_std, p.m_std)) + "," + format_sig(pearson(p.m_std, p.m_corr)) +
           "," + (p.topk.empty() ? std::string() : format_sig(pearson(p.topk_std, p.topk))) + "\n";
    return out;
}

nlohmann::ordered_json stats_report_json(std::span<const FeatureStats> stats) {
    check_nonempty(stats);
    auto num = [](double v) { return std::isnan(v) ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(v); };
    nlohmann::ordered_json doc;
    auto& layers = doc["layers"] = nlohmann::ordered_json::array();
    for (const auto& s : stats) {
        nlohmann::ordered_json l;
        l["layer_id"] = s.layer_id;
        l["m_std"] = s.m_std;
        l["m_corr"] = s.m_corr;
        if (s.topk_corr) {
            l["k"] = s.k;
            l["topk_corr"] = *s.topk_corr;
        }
        l["summary"] = {{"m_std", num(mean_of(s.m_std))},
                        {"m_corr", num(mean_of(s.m_corr))},
                        {"topk_corr", s.topk_corr ? num(mean_of(*s.topk_corr)) : nlohmann::ordered_json(nullptr)}};
        layers.push_back(std::move(l));
    }
    const Pooled p = pool(stats);
    doc["global"] = {{"pearson_m_std_m_corr", num(pearson(p.m_std, p.m_corr))},
                     {"pearson_m_std_topk_corr", p.topk.empty() ? nlohmann::ordered_json(nullptr) : num(pearson(p.topk_std, p.topk))}};
    return doc;
}

}  // namespace fmprune::stats
