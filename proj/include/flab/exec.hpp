#pragma once

namespace flab {

/// Selects the OpenMP kernel or the plain serial reference loop. Both give
/// the same result; the serial path is kept for tests and benchmarks.
enum class Exec { serial, parallel };

}  // namespace flab
