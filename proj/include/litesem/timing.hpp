#pragma once

#include <chrono>
#include <string>

namespace litesem {

enum class Phase { Index, Query };

/// One measured unit of work: a document indexed or a query answered.
struct TimingEvent {
    Phase phase;
    double seconds;
};

class Stopwatch {
  public:
    Stopwatch() : m_start(std::chrono::steady_clock::now()) {}

    [[nodiscard]] double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - m_start).count();
    }

  private:
    std::chrono::steady_clock::time_point m_start;
};

} // namespace litesem
