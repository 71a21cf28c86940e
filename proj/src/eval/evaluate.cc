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

#include "eval/evaluate.h"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <stdexcept>

namespace geosyn {

namespace {

std::string joined(const std::vector<std::string>& ids) {
  std::string out;
  for (const auto& id : ids) out += (out.empty() ? "" : ", ") + id;
  return out;
}

}  // namespace

std::vector<EvalTile> align_for_eval(const Manifest& real_m,
                                     const Manifest& fake_m,
                                     const LoadOptions& opt) {
  std::map<std::string, const TileRecord*> fake_by_id;
  for (const auto& rec : fake_m.test) fake_by_id[rec.id] = &rec;

  std::vector<std::string> missing, extra;
  for (const auto& rec : real_m.test)
    if (!fake_by_id.count(rec.id)) missing.push_back(rec.id);
  {
    std::map<std::string, bool> real_ids;
    for (const auto& rec : real_m.test) real_ids[rec.id] = true;
    for (const auto& rec : fake_m.test)
      if (!real_ids.count(rec.id)) extra.push_back(rec.id);
  }
  if (!missing.empty())
    throw std::invalid_argument(
        "evaluate: test tiles missing from the synthesized set: [" +
        joined(missing) + "]");
  if (!extra.empty())
    throw std::invalid_argument(
        "evaluate: synthesized tiles with no real counterpart: [" +
        joined(extra) + "]");
  if (real_m.test.empty())
    throw std::invalid_argument("evaluate: the test split is empty");

  std::vector<EvalTile> tiles;
  tiles.reserve(real_m.test.size());
  for (const auto& rec : real_m.test) {
    LoadedTile real_t = load_tile(real_m, rec, opt);
    LoadedTile fake_t = load_tile(fake_m, *fake_by_id[rec.id], opt);
    if (!real_t.image.same_shape(fake_t.image))
      throw std::invalid_argument("evaluate: tile " + rec.id +
                                  " has mismatched real/fake image shapes");
    tiles.push_back({rec.id, std::move(fake_t.image), std::move(real_t.image),
                     std::move(real_t.labels)});
  }
  return tiles;
}

EvalResult evaluate_run(const std::vector<EvalTile>& tiles, SegTrainer& seg) {
  if (tiles.empty())
    throw std::invalid_argument("evaluate: no aligned tiles to score");
  int64_t classes = seg.config().unet.num_classes;
  int64_t dim = seg.config().unet.feature_dim();
  int64_t n = static_cast<int64_t>(tiles.size());

  ConfusionMatrix cm_gt(classes), cm_real(classes);
  Tensor<float> feats_fake({n, dim}), feats_real({n, dim});
  for (int64_t i = 0; i < n; ++i) {
    const EvalTile& t = tiles[i];
    Tensor<int32_t> seg_fake = seg.segment(t.fake);
    Tensor<int32_t> seg_real = seg.segment(t.real);
    cm_gt.add(seg_fake, t.gt);
    cm_real.add(seg_fake, seg_real);
    Tensor<float> ff = seg.features(t.fake);
    Tensor<float> fr = seg.features(t.real);
    for (int64_t j = 0; j < dim; ++j) {
      feats_fake[i * dim + j] = ff[j];
      feats_real[i * dim + j] = fr[j];
    }
  }

  EvalResult r;
  r.vs_gt = {"vs_ground_truth", iou_miou_pixacc(cm_gt)};
  r.vs_real = {"vs_real_segmentation", iou_miou_pixacc(cm_real)};
  r.fd = frechet_distance(feature_moments(feats_real),
                          feature_moments(feats_fake));
  r.fd_samples_real = n;
  r.fd_samples_fake = n;
  return r;
}

void write_report_csv(const EvalResult& r, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("evaluate: cannot write " + path);
  out << std::setprecision(10);
  out << "protocol,metric,class,value\n";
  for (const EvalReport* rep : {&r.vs_gt, &r.vs_real}) {
    out << rep->protocol << ",pixel_acc,," << rep->scores.pix_acc << '\n';
    out << rep->protocol << ",miou,," << rep->scores.miou << '\n';
    for (size_t c = 0; c < rep->scores.per_class.size(); ++c) {
      out << rep->protocol << ",iou," << c << ',';
      if (rep->scores.per_class[c].defined)
        out << rep->scores.per_class[c].iou;
      else
        out << "undefined";
      out << '\n';
    }
  }
  out << ",fd,," << r.fd << '\n';
  out << ",fd_samples_real,," << r.fd_samples_real << '\n';
  out << ",fd_samples_fake,," << r.fd_samples_fake << '\n';
}

std::string render_table(const EvalResult& r) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(6);
  out << std::left << std::setw(28) << "protocol" << std::setw(12)
      << "pixel_acc" << std::setw(12) << "mIoU" << "FD\n";
  for (const EvalReport* rep : {&r.vs_gt, &r.vs_real})
    out << std::setw(28) << rep->protocol << std::setw(12)
        << rep->scores.pix_acc << std::setw(12) << rep->scores.miou << r.fd
        << '\n';
  out << "feature samples: real " << r.fd_samples_real << ", fake "
      << r.fd_samples_fake << '\n';
  out << "per-class IoU\n";
  out << "  " << std::setw(8) << "class" << std::setw(20) << "vs_ground_truth"
      << "vs_real_segmentation\n";
  for (size_t c = 0; c < r.vs_gt.scores.per_class.size(); ++c) {
    auto cell = [&](const ClassIou& k) {
      std::ostringstream s;
      if (k.defined)
        s << std::fixed << std::setprecision(6) << k.iou;
      else
        s << "undefined";
      return s.str();
    };
    out << "  " << std::setw(8) << c << std::setw(20)
        << cell(r.vs_gt.scores.per_class[c])
        << cell(r.vs_real.scores.per_class[c]) << '\n';
  }
  return out.str();
}

}  // namespace geosyn
