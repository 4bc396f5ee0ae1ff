// Copyright 2026 The forgeci Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// A forked child that writes a randomized byte stream to a log file, used to
// exercise the log follower against real concurrent appends.

#ifndef FORGECI_TESTS_LOG_WRITER_HPP_
#define FORGECI_TESTS_LOG_WRITER_HPP_

#include <fcntl.h>
#include <time.h>
#include <unistd.h>

#include <filesystem>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "forgeci/process.hpp"

namespace forgeci::testing {

struct WritePlan {
  std::string bytes;
  std::vector<std::size_t> chunk_sizes;
  std::vector<long> delays_us;  // before each chunk
};

// Chunks of 1 B..64 KiB with 0..2 ms pauses; about a quarter of the plans
// write everything at once and exit immediately.
inline WritePlan random_plan(std::mt19937_64& rng) {
  WritePlan plan;
  const bool burst = rng() % 4 == 0;
  const int chunks = 1 + static_cast<int>(rng() % (burst ? 3 : 12));
  for (int i = 0; i < chunks; ++i) {
    const std::size_t size = rng() % 3 == 0 ? 1 + rng() % (64 * 1024) : 1 + rng() % 512;
    for (std::size_t k = 0; k < size; ++k) plan.bytes += static_cast<char>(rng() % 256);
    plan.chunk_sizes.push_back(size);
    plan.delays_us.push_back(burst ? 0 : static_cast<long>(rng() % 2000));
  }
  return plan;
}

// Forks a writer. The child only uses async-signal-safe calls.
inline std::shared_ptr<process::ProcessHandle> start_writer(const std::filesystem::path& path,
                                                            const WritePlan& plan) {
  const std::string p = path.string();
  const pid_t pid = ::fork();
  if (pid == 0) {
    const int fd = ::open(p.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    if (fd < 0) ::_exit(3);
    std::size_t off = 0;
    for (std::size_t i = 0; i < plan.chunk_sizes.size(); ++i) {
      if (plan.delays_us[i] > 0) {
        timespec ts{0, plan.delays_us[i] * 1000};
        ::nanosleep(&ts, nullptr);
      }
      std::size_t left = plan.chunk_sizes[i];
      while (left > 0) {
        const ssize_t n = ::write(fd, plan.bytes.data() + off, left);
        if (n <= 0) ::_exit(4);
        off += static_cast<std::size_t>(n);
        left -= static_cast<std::size_t>(n);
      }
    }
    ::_exit(0);
  }
  return process::ProcessHandle::adopt(pid);
}

}  // namespace forgeci::testing

#endif  // FORGECI_TESTS_LOG_WRITER_HPP_
