#pragma once

namespace mlfsm {

/// Selects the serial reference path or the OpenMP path of a kernel.
/// Both paths produce identical results; the serial one is kept for tests.
enum class Exec { serial, parallel };

}  // namespace mlfsm
