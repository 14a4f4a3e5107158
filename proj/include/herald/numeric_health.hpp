#pragma once

#include <cstdint>
#include <deque>
#include <sstream>
#include <string>

#include "herald/log.hpp"

namespace herald {

/// Per-thread counters for floating-point trouble. Ops log here instead
/// of aborting: exp underflow and the occasional inf are legitimate
/// mid-training, but the training loop inspects the final loss and the
/// counters to decide whether a run diverged.
class NumericHealth {
public:
    void note_div_by_zero(std::size_t count) {
        div_by_zero_ += count;
        note("elementwise div: " + std::to_string(count) + " zero divisor(s)");
    }

    void note_non_finite(const char* op, std::size_t nans, std::size_t infs) {
        nan_ += nans;
        inf_ += infs;
        std::ostringstream os;
        os << op << ": " << nans << " NaN, " << infs << " Inf";
        note(os.str());
    }

    std::uint64_t nan_count() const { return nan_; }
    std::uint64_t inf_count() const { return inf_; }
    std::uint64_t div_by_zero_count() const { return div_by_zero_; }

    bool clean() const { return nan_ == 0 && inf_ == 0 && div_by_zero_ == 0; }

    void reset() {
        nan_ = inf_ = div_by_zero_ = 0;
        recent_.clear();
    }

    std::string report() const {
        std::ostringstream os;
        os << "numeric health: nan=" << nan_ << " inf=" << inf_
           << " div_by_zero=" << div_by_zero_;
        for (const auto& m : recent_) os << "\n  " << m;
        return os.str();
    }

private:
    void note(const std::string& msg) {
        log_debug(msg);
        recent_.push_back(msg);
        while (recent_.size() > kMaxRecent) recent_.pop_front();
    }

    static constexpr std::size_t kMaxRecent = 16;
    std::uint64_t nan_ = 0;
    std::uint64_t inf_ = 0;
    std::uint64_t div_by_zero_ = 0;
    std::deque<std::string> recent_;
};

/// One instance per thread: the tape is thread-confined and CV folds may
/// train on parallel threads with independent tapes.
inline NumericHealth& numeric_health() {
    thread_local NumericHealth health;
    return health;
}

}  // namespace herald
