#include "multiface/pairs.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "multiface/errors.hpp"

namespace multiface {

PairSet parse_pairs(std::string_view text) {
    PairSet pairs;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream fields(line);
        std::string a, b, label, extra;
        if (!(fields >> a)) continue;
        auto fail = [&](const std::string& why) {
            throw FormatError("bad_pair_line", "pairs line " + std::to_string(line_no) + ": " + why);
        };
        if (!(fields >> b >> label)) fail("expected 'index_a index_b label'");
        if (fields >> extra) fail("unexpected field '" + extra + "'");
        auto to_index = [&](const std::string& s) -> std::size_t {
            if (s.empty() || !std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); })) {
                fail("index '" + s + "' is not a non-negative integer");
            }
            return std::stoull(s);
        };
        if (label != "0" && label != "1") fail("label must be 0 or 1, got '" + label + "'");
        pairs.push_back({to_index(a), to_index(b), label == "1"});
    }
    return pairs;
}

std::string format_pairs(const PairSet& pairs) {
    std::string out = "# index_a index_b same\n";
    for (const Pair& p : pairs) {
        out += std::to_string(p.a) + ' ' + std::to_string(p.b) + ' ' + (p.same ? '1' : '0') + '\n';
    }
    return out;
}

PairSet load_pairs(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("file_not_found", "cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_pairs(ss.str());
}

void save_pairs(const PairSet& pairs, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw FormatError("write_failed", "cannot open " + path + " for writing");
    out << format_pairs(pairs);
}

PairSet make_balanced_pairs(std::span<const std::uint32_t> labels, std::size_t per_kind, std::mt19937_64& rng) {
    std::map<std::uint32_t, std::vector<std::size_t>> by_label;
    for (std::size_t i = 0; i < labels.size(); ++i) by_label[labels[i]].push_back(i);

    std::vector<Pair> positives;
    for (const auto& [label, idx] : by_label)
        for (std::size_t i = 0; i < idx.size(); ++i)
            for (std::size_t j = i + 1; j < idx.size(); ++j) positives.push_back({idx[i], idx[j], true});
    const std::size_t n = labels.size();
    const std::size_t negative_total = n * (n - (n > 0)) / 2 - positives.size();
    if (positives.size() < per_kind || negative_total < per_kind) {
        throw ValueError("not_enough_pairs", "requested " + std::to_string(per_kind) + " pairs per kind, have " +
                                                 std::to_string(positives.size()) + " positive and " +
                                                 std::to_string(negative_total) + " negative candidates");
    }
    std::shuffle(positives.begin(), positives.end(), rng);
    positives.resize(per_kind);
    std::sort(positives.begin(), positives.end(), [](const Pair& x, const Pair& y) {
        return std::tie(x.a, x.b) < std::tie(y.a, y.b);
    });

    std::set<std::pair<std::size_t, std::size_t>> negatives;
    if (per_kind * 2 > negative_total) {
        std::vector<std::pair<std::size_t, std::size_t>> all;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j)
                if (labels[i] != labels[j]) all.emplace_back(i, j);
        std::shuffle(all.begin(), all.end(), rng);
        negatives.insert(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(per_kind));
    } else {
        std::uniform_int_distribution<std::size_t> pick(0, n - 1);
        while (negatives.size() < per_kind) {
            std::size_t a = pick(rng), b = pick(rng);
            if (labels[a] == labels[b]) continue;
            negatives.emplace(std::min(a, b), std::max(a, b));
        }
    }
    PairSet out = std::move(positives);
    for (const auto& [a, b] : negatives) out.push_back({a, b, false});
    return out;
}

}  // namespace multiface
