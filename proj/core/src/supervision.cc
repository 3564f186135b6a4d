// src/supervision.cc

// Copyright 2026  The bridge-oa Authors
//
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

#include "bridge_oa/supervision.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

#include "bridge_oa/error.h"
#include "bridge_oa/layers.h"

namespace bridge_oa {

void MosScore::validate() const {
  if (!(sig >= 1.0 && sig <= 5.0 && bak >= 1.0 && bak <= 5.0)) {
    std::ostringstream msg;
    msg << "MOS scores must lie in [1, 5], got sig=" << sig << " bak=" << bak;
    throw InvalidArgument(msg.str());
  }
}

double norm_mos(double alpha) {
  if (!(alpha >= 1.0 && alpha <= 5.0))
    throw InvalidArgument("MOS value must lie in [1, 5], got " + std::to_string(alpha));
  return (alpha - 1.0) / 4.0;
}

double pq_target(const MosScore &m) {
  m.validate();
  return (norm_mos(m.sig) + norm_mos(m.bak)) / 2.0;
}

double loss_pq(double omega_hat, double target) {
  double d = omega_hat - target;
  return d * d;
}

double loss_pq(std::span<const double> omega_hat, std::span<const double> target) {
  if (omega_hat.size() != target.size() || omega_hat.empty())
    throw InvalidArgument("loss_pq: batch sizes differ or are empty");
  double sum = 0.0;
  for (std::size_t i = 0; i < omega_hat.size(); ++i)
    sum += loss_pq(omega_hat[i], target[i]);
  return sum / static_cast<double>(omega_hat.size());
}

double loss_ri(std::span<const double> logits, std::span<const double> wers,
               Eigen::VectorXd *d_logits) {
  if (logits.size() != wers.size())
    throw InvalidArgument("loss_ri: logits length " + std::to_string(logits.size()) +
                          " != wers length " + std::to_string(wers.size()));
  if (logits.size() < 2) throw InvalidArgument("loss_ri: need at least 2 entries");
  const auto n = static_cast<Eigen::Index>(logits.size());
  Eigen::VectorXd p(n), q(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    p[i] = nn::sigmoid(logits[i]);
    q[i] = nn::sigmoid(wers[i]);
  }
  const double np = p.norm(), nq = q.norm();
  const double cos = p.dot(q) / (np * nq);
  const double s = nn::sigmoid(cos);
  // -log sigmoid(c) = log1p(exp(-c)), stable for c in [0, 1].
  const double loss = std::log1p(std::exp(-cos));
  if (d_logits) {
    const double d_cos = -(1.0 - s);
    Eigen::VectorXd d_p = (q / (np * nq) - cos * p / (np * np)) * d_cos;
    *d_logits = d_p.array() * p.array() * (1.0 - p.array());
  }
  return loss;
}

double loss_ri_lower_bound() { return std::log1p(std::exp(-1.0)); }
double loss_ri_upper_bound() { return std::log(2.0); }

double loss_combined(double lpq, double lri) { return (lpq + lri) / 2.0; }

Transcript normalize_text(std::string_view raw) {
  Transcript out;
  std::string cur;
  auto flush = [&] {
    // Apostrophes only survive between word characters.
    while (!cur.empty() && cur.back() == '\'') cur.pop_back();
    std::size_t lead = 0;
    while (lead < cur.size() && cur[lead] == '\'') ++lead;
    cur.erase(0, lead);
    if (!cur.empty()) out.words.push_back(cur);
    cur.clear();
  };
  for (char ch : raw) {
    auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c) || c >= 0x80) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (ch == '\'') {
      cur.push_back(ch);
    } else if (std::isspace(c)) {
      flush();
    }
    // Other punctuation is dropped without splitting the word.
  }
  flush();
  return out;
}

EditCounts edit_distance(const Transcript &ref, const Transcript &hyp) {
  const std::size_t n = ref.size(), m = hyp.size();
  struct Cell {
    std::size_t cost, sub, ins, del;
  };
  std::vector<Cell> prev(m + 1), cur(m + 1);
  for (std::size_t j = 0; j <= m; ++j) prev[j] = {j, 0, j, 0};
  for (std::size_t i = 1; i <= n; ++i) {
    cur[0] = {i, 0, 0, i};
    for (std::size_t j = 1; j <= m; ++j) {
      const bool same = ref.words[i - 1] == hyp.words[j - 1];
      Cell diag = prev[j - 1];
      diag.cost += same ? 0 : 1;
      diag.sub += same ? 0 : 1;
      Cell del = prev[j];
      ++del.cost;
      ++del.del;
      Cell ins = cur[j - 1];
      ++ins.cost;
      ++ins.ins;
      Cell best = diag;
      if (del.cost < best.cost) best = del;
      if (ins.cost < best.cost) best = ins;
      cur[j] = best;
    }
    std::swap(prev, cur);
  }
  const Cell &c = prev[m];
  return {c.sub, c.ins, c.del, n};
}

double wer(const Transcript &ref, const Transcript &hyp) {
  if (ref.empty()) throw InvalidArgument("WER undefined for an empty reference");
  return static_cast<double>(edit_distance(ref, hyp).errors()) /
         static_cast<double>(ref.size());
}

}  // namespace bridge_oa
