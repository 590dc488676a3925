// src/training.cpp

// Copyright 2026  tcssd authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "tcssd/training.hpp"

#include <algorithm>
#include <set>

namespace tcssd {

BatchSampler::BatchSampler(const std::vector<int>& labels, int batch_size, bool balanced,
                           std::uint64_t seed)
    : batch_size_(batch_size), rng_(seed) {
  const std::set<int> classes(labels.begin(), labels.end());
  balanced_ = balanced && classes.size() == 2;
  if (balanced_) {
    pools_.resize(2);
    const int first = *classes.begin();
    for (std::size_t i = 0; i < labels.size(); ++i)
      pools_[labels[i] == first ? 0 : 1].items.push_back(i);
  } else {
    pools_.resize(1);
    for (std::size_t i = 0; i < labels.size(); ++i) pools_[0].items.push_back(i);
  }
  for (auto& p : pools_) {
    std::shuffle(p.items.begin(), p.items.end(), rng_);
  }
}

std::size_t BatchSampler::Draw(Pool& pool) {
  if (pool.pos == pool.items.size()) {
    std::shuffle(pool.items.begin(), pool.items.end(), rng_);
    pool.pos = 0;
  }
  return pool.items[pool.pos++];
}

std::vector<std::size_t> BatchSampler::Next() {
  std::vector<std::size_t> batch;
  batch.reserve(static_cast<std::size_t>(batch_size_));
  for (int i = 0; i < batch_size_; ++i)
    batch.push_back(Draw(balanced_ ? pools_[static_cast<std::size_t>(i % 2)] : pools_[0]));
  return batch;
}

std::uint64_t ItemSeed(std::uint64_t seed, long step, std::size_t item) {
  // splitmix64 finaliser over the combined key.
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(step) * 65537ULL + item + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

long PlannedSteps(const TrainConfig& cfg, std::size_t n_examples) {
  if (cfg.max_steps > 0) return cfg.max_steps;
  const long per_epoch = (static_cast<long>(n_examples) + cfg.batch_size - 1) / cfg.batch_size;
  return per_epoch * cfg.epochs;
}

}  // namespace tcssd
