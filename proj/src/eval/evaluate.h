/* Copyright 2026 The geosyn Authors

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef GEOSYN_EVAL_EVALUATE_H_
#define GEOSYN_EVAL_EVALUATE_H_

#include <string>
#include <vector>

#include "data/dataset.h"
#include "metrics/metrics.h"
#include "seg/segmenter.h"

namespace geosyn {

// Double-reference scoring of synthesized imagery. Protocol A segments the
// fake tile and scores it against the annotated ground truth; protocol B
// scores it against the segmentation of the corresponding real tile, which
// bounds what the segmenter itself can resolve. The Frechet distance
// compares feature moments of the real and fake sets.
struct EvalReport {
  std::string protocol;  // "vs_ground_truth" | "vs_real_segmentation"
  SegScores scores;
};

struct EvalResult {
  EvalReport vs_gt;
  EvalReport vs_real;
  double fd = 0.0;
  int64_t fd_samples_real = 0;
  int64_t fd_samples_fake = 0;
};

struct EvalTile {
  std::string id;
  Tensor<float> fake;   // [C,H,W], normalized
  Tensor<float> real;   // [C,H,W], normalized
  Tensor<int32_t> gt;   // [H,W]
};

// Pairs the test splits of the real and synthesized datasets by tile id and
// loads aligned triples. Ids present on only one side abort with the full
// list of offenders.
std::vector<EvalTile> align_for_eval(const Manifest& real_m,
                                     const Manifest& fake_m,
                                     const LoadOptions& opt);

EvalResult evaluate_run(const std::vector<EvalTile>& tiles, SegTrainer& seg);

// Long-form CSV: protocol,metric,class,value rows.
void write_report_csv(const EvalResult& r, const std::string& path);

// Table mirroring the usual per-protocol layout, for terminal output.
std::string render_table(const EvalResult& r);

}  // namespace geosyn

#endif  // GEOSYN_EVAL_EVALUATE_H_
