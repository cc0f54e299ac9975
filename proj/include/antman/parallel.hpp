#pragma once

namespace antman {

/// Worker count used for block-parallel MVs. Starts at 1 unless the
/// ANTMAN_THREADS environment variable holds an integer >= 1.
int num_threads();

/// Overrides the worker count for the rest of the process. Values < 1 clamp to 1.
void set_num_threads(int threads);

/// Parses an ANTMAN_THREADS-style value; returns 0 when it is not an integer >= 1.
int parse_thread_count(const char* text);

}  // namespace antman
