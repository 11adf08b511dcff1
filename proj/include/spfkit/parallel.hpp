#pragma once

#include <functional>

namespace spfkit {

/// Worker-thread cap for per-observation likelihood evaluation. Defaults to 1.
/// Results are bit-identical for any setting: workers only fill independent
/// per-observation slots and all reductions run serially in index order.
void set_max_threads(int n);
int max_threads();

/// Runs fn(i) for every i in [0, n). fn must write only to slot i of any
/// shared output. With max_threads() == 1 this is a plain loop.
void parallel_for(int n, const std::function<void(int)>& fn);

}  // namespace spfkit
