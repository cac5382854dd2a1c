#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace rfs {

/// Collects non-fatal conditions (truncation, fallback behaviour) raised
/// while filtering. Pass nullptr where nobody is listening.
struct Diagnostics {
    std::vector<std::string> messages;
    void note(std::string msg) { messages.push_back(std::move(msg)); }
};

inline void note(Diagnostics* diag, const std::string& msg) {
    if (diag != nullptr) diag->note(msg);
}

/// A filter step failed; carries the frame index at which it happened.
class FilterError : public std::runtime_error {
public:
    FilterError(std::size_t frame, const std::string& what)
        : std::runtime_error("frame " + std::to_string(frame) + ": " + what), frame_(frame) {}
    [[nodiscard]] std::size_t frame() const { return frame_; }

private:
    std::size_t frame_;
};

} // namespace rfs
