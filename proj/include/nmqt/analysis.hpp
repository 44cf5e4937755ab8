#pragma once

// Detection-record statistics: waiting times between detections, the
// inter-sideband waits of the prism experiment, 100-bin histograms and their
// L1 comparison, and per-channel counts with binomial errors.

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "nmqt/engine.hpp"

namespace nmqt {

using ChannelPredicate = std::function<bool(const std::string&)>;

inline ChannelPredicate any_channel() {
    return [](const std::string&) { return true; };
}
inline ChannelPredicate channel_is(std::string label) {
    return [label = std::move(label)](const std::string& ch) { return ch == label; };
}

// Gaps between consecutive detections passing the predicate; detections in
// other channels are ignored (gaps are measured between retained ones).
inline std::vector<double> waiting_times(const std::vector<DetectionRecord>& records,
                                         const ChannelPredicate& subset = any_channel()) {
    std::vector<double> waits;
    double last_t = -1e300;
    bool have_kept = false;
    double prev_kept = 0.0;
    for (const auto& r : records) {
        if (r.t < last_t) throw std::domain_error("waiting_times: records not time-ordered");
        last_t = r.t;
        if (!subset(r.channel)) continue;
        if (have_kept) waits.push_back(r.t - prev_kept);
        prev_kept = r.t;
        have_kept = true;
    }
    return waits;
}

// Time from each side-peak detection to the next detection in the opposite
// side peak. Convention: the first unmatched detection on a side opens that
// side's pending pair; further same-side detections do not refresh it;
// central-peak detections are ignored.
inline std::vector<double> inter_sideband_waits(const std::vector<DetectionRecord>& records,
                                                const std::string& left_id,
                                                const std::string& right_id) {
    std::vector<double> waits;
    bool left_open = false, right_open = false;
    double left_t = 0.0, right_t = 0.0;
    double last_t = -1e300;
    for (const auto& r : records) {
        if (r.t < last_t) throw std::domain_error("inter_sideband_waits: records not time-ordered");
        last_t = r.t;
        if (r.channel == left_id) {
            if (right_open) {
                waits.push_back(r.t - right_t);
                right_open = false;
            }
            if (!left_open) {
                left_open = true;
                left_t = r.t;
            }
        } else if (r.channel == right_id) {
            if (left_open) {
                waits.push_back(r.t - left_t);
                left_open = false;
            }
            if (!right_open) {
                right_open = true;
                right_t = r.t;
            }
        }
    }
    return waits;
}

struct WaitingHistogram {
    std::vector<double> bin_edges;  // n_bins + 1 monotone edges
    std::vector<std::uint64_t> counts;
    std::uint64_t overflow = 0;
    std::uint64_t total = 0;  // in-range counts (sum of bins)
    std::string channel_filter;

    std::size_t n_bins() const { return counts.size(); }
};

inline WaitingHistogram histogram(const std::vector<double>& waits, std::size_t n_bins = 100,
                                  double t_max = 5.0, std::string channel_filter = "") {
    if (n_bins == 0 || !(t_max > 0.0)) throw std::domain_error("histogram: bad bin layout");
    WaitingHistogram h;
    h.channel_filter = std::move(channel_filter);
    h.bin_edges.resize(n_bins + 1);
    for (std::size_t i = 0; i <= n_bins; ++i)
        h.bin_edges[i] = t_max * double(i) / double(n_bins);
    h.counts.assign(n_bins, 0);
    for (double w : waits) {
        if (w < 0.0) throw std::domain_error("histogram: negative waiting time");
        auto bin = std::size_t(w / t_max * double(n_bins));
        if (w >= t_max || bin >= n_bins) {
            ++h.overflow;
            continue;
        }
        ++h.counts[bin];
        ++h.total;
    }
    return h;
}

// L1 distance between normalized histograms (in-range mass only; the
// overflow bin is excluded from the distance and reported separately by the
// histograms themselves). Range [0, 2]; identical shapes give 0, disjoint
// single-bin histograms give 2.
inline double histogram_distance(const WaitingHistogram& a, const WaitingHistogram& b) {
    if (a.bin_edges.size() != b.bin_edges.size())
        throw std::domain_error("histogram_distance: bin layouts differ");
    for (std::size_t i = 0; i < a.bin_edges.size(); ++i)
        if (std::abs(a.bin_edges[i] - b.bin_edges[i]) > 1e-12)
            throw std::domain_error("histogram_distance: bin edges differ");
    if (a.total == 0 || b.total == 0)
        throw std::domain_error("histogram_distance: empty histogram");
    double d = 0.0;
    for (std::size_t i = 0; i < a.counts.size(); ++i)
        d += std::abs(double(a.counts[i]) / double(a.total) -
                      double(b.counts[i]) / double(b.total));
    return d;
}

struct ChannelCounts {
    std::map<std::string, std::uint64_t> counts;
    std::uint64_t total = 0;

    double fraction(const std::string& ch) const {
        auto it = counts.find(ch);
        return (total > 0 && it != counts.end()) ? double(it->second) / double(total) : 0.0;
    }
    // binomial standard error of the fraction
    double fraction_stderr(const std::string& ch) const {
        if (total == 0) return 0.0;
        const double f = fraction(ch);
        return std::sqrt(f * (1.0 - f) / double(total));
    }
    // a : b ratio; undefined (flagged negative) when b has no counts
    double ratio(const std::string& a, const std::string& b) const {
        auto ib = counts.find(b);
        if (ib == counts.end() || ib->second == 0) return -1.0;
        auto ia = counts.find(a);
        return double(ia == counts.end() ? 0 : ia->second) / double(ib->second);
    }
};

inline ChannelCounts channel_counts(const std::vector<DetectionRecord>& records) {
    ChannelCounts out;
    for (const auto& r : records) {
        ++out.counts[r.channel];
        ++out.total;
    }
    return out;
}

inline void write_histogram_csv(const WaitingHistogram& h, std::ostream& os) {
    os << "# channel_filter=" << (h.channel_filter.empty() ? "all" : h.channel_filter)
       << " total=" << h.total << " overflow=" << h.overflow << "\n";
    os << "bin_lo,bin_hi,count,density\n";
    os.precision(12);
    for (std::size_t i = 0; i < h.counts.size(); ++i) {
        const double lo = h.bin_edges[i], hi = h.bin_edges[i + 1];
        const double density =
            h.total > 0 ? double(h.counts[i]) / double(h.total) / (hi - lo) : 0.0;
        os << lo << "," << hi << "," << h.counts[i] << "," << density << "\n";
    }
}

} // namespace nmqt
