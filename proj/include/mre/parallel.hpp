#pragma once

namespace mre {

/// Selects between the OpenMP kernel and its serial reference.
enum class Execution { Serial, Parallel };

/// Worker count for parallel kernels: OpenMP's maximum, capped by the
/// MRE_THREADS environment variable when it holds a positive integer.
int thread_count();

/// Overrides MRE_THREADS for the rest of the process (0 clears the override).
void set_thread_cap(int cap);

}  // namespace mre
