// SPDX-License-Identifier: Apache-2.0
#include "snet/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace snet {

void ConfusionCounts::add(int predicted, int actual) {
  if (actual == 1)
    predicted == 1 ? ++tp : ++fn;
  else
    predicted == 1 ? ++fp : ++tn;
}

namespace {

ClassMetrics class_metrics(std::uint64_t tp, std::uint64_t fp, std::uint64_t fn) {
  ClassMetrics m;
  m.precision = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
  m.recall = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
  m.f1 = m.precision + m.recall == 0.0 ? 0.0
                                       : 2.0 * m.precision * m.recall / (m.precision + m.recall);
  return m;
}

}  // namespace

MetricsReport compute_metrics(const ConfusionCounts& counts) {
  if (counts.total() == 0) throw std::invalid_argument("compute_metrics: no examples");
  MetricsReport report;
  report.accuracy =
      static_cast<double>(counts.tp + counts.tn) / static_cast<double>(counts.total());
  report.positive = class_metrics(counts.tp, counts.fp, counts.fn);
  // Class 0 viewed as the positive class swaps the confusion roles.
  report.negative = class_metrics(counts.tn, counts.fn, counts.fp);
  report.macro_precision = 0.5 * (report.positive.precision + report.negative.precision);
  report.macro_recall = 0.5 * (report.positive.recall + report.negative.recall);
  report.macro_f1 = 0.5 * (report.positive.f1 + report.negative.f1);
  return report;
}

std::string metrics_to_json(const MetricsReport& report, const std::string& model_name) {
  nlohmann::json j;
  j["model"] = model_name;
  j["accuracy"] = report.accuracy;
  j["macro_precision"] = report.macro_precision;
  j["macro_recall"] = report.macro_recall;
  j["macro_f1"] = report.macro_f1;
  j["class_1"] = {{"precision", report.positive.precision},
                  {"recall", report.positive.recall},
                  {"f1", report.positive.f1}};
  j["class_0"] = {{"precision", report.negative.precision},
                  {"recall", report.negative.recall},
                  {"f1", report.negative.f1}};
  return j.dump(2);
}

std::string metrics_to_csv(const MetricsReport& report, const std::string& model_name) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "model,accuracy,precision,recall,f1\n%s,%.4f,%.4f,%.4f,%.4f\n",
                model_name.c_str(), report.accuracy, report.macro_precision, report.macro_recall,
                report.macro_f1);
  return buf;
}

namespace {

template <typename Model>
std::vector<double> score_impl(const Model& model, const EmbeddingTable& table,
                               std::span<const CleanExample> examples) {
  std::vector<double> probs;
  probs.reserve(examples.size());
  RngState unused(0);
  for (const auto& ex : examples)
    probs.push_back(model.forward(table.embed(ex.tokens), false, unused, nullptr));
  return probs;
}

template <typename Model>
MetricsReport evaluate_impl(const Model& model, const EmbeddingTable& table,
                            std::span<const CleanExample> examples) {
  const std::vector<double> probs = score_impl(model, table, examples);
  ConfusionCounts counts;
  for (std::size_t i = 0; i < examples.size(); ++i)
    counts.add(predict_label(probs[i]), examples[i].label);
  return compute_metrics(counts);
}

}  // namespace

std::vector<double> score_examples(const BaselineClassifier& model, const EmbeddingTable& table,
                                   std::span<const CleanExample> examples) {
  return score_impl(model, table, examples);
}

std::vector<double> score_examples(const AttentionClassifier& model, const EmbeddingTable& table,
                                   std::span<const CleanExample> examples) {
  return score_impl(model, table, examples);
}

MetricsReport evaluate_model(const BaselineClassifier& model, const EmbeddingTable& table,
                             std::span<const CleanExample> examples) {
  return evaluate_impl(model, table, examples);
}

MetricsReport evaluate_model(const AttentionClassifier& model, const EmbeddingTable& table,
                             std::span<const CleanExample> examples) {
  return evaluate_impl(model, table, examples);
}

std::string attention_to_json(const AttentionVisualization& viz) {
  nlohmann::json j;
  j["id"] = viz.id;
  j["language"] = to_string(viz.language);
  j["tokens"] = viz.tokens;
  j["probability"] = viz.probability;
  j["confidence"] = viz.confidence;
  j["predicted"] = viz.predicted;
  j["mean_pairwise_cosine"] = viz.mean_pairwise_cosine;
  nlohmann::json hops = nlohmann::json::array();
  for (std::size_t k = 0; k < viz.hops.size(); ++k)
    hops.push_back({{"hop", viz.hops[k]}, {"weights", viz.hop_weights[k]}});
  j["hops"] = hops;
  return j.dump(2);
}

namespace {

std::string html_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

}  // namespace

std::string attention_to_html(const AttentionVisualization& viz) {
  std::string out;
  out += "<!doctype html>\n<html>\n<head><meta charset=\"utf-8\"><title>attention ";
  out += html_escape(viz.id);
  out += "</title></head>\n<body style=\"font-family:sans-serif;margin:2em\">\n";
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "<h3>%s (%s) &mdash; p=%.4f, predicted label %d, confidence %.4f</h3>\n",
                html_escape(viz.id).c_str(), to_string(viz.language).c_str(), viz.probability,
                viz.predicted, viz.confidence);
  out += buf;
  std::snprintf(buf, sizeof buf, "<p>mean pairwise hop cosine: %.4f</p>\n",
                viz.mean_pairwise_cosine);
  out += buf;
  for (std::size_t k = 0; k < viz.hops.size(); ++k) {
    const auto& weights = viz.hop_weights[k];
    const double max_w = *std::max_element(weights.begin(), weights.end());
    std::snprintf(buf, sizeof buf, "<div style=\"margin:4px 0\"><b>hop %zu</b> ", viz.hops[k]);
    out += buf;
    for (std::size_t t = 0; t < viz.tokens.size(); ++t) {
      const double alpha = max_w > 0.0 ? weights[t] / max_w : 0.0;
      std::snprintf(buf, sizeof buf,
                    "<span title=\"%.4f\" style=\"background:rgba(214,39,40,%.3f);"
                    "padding:2px;margin:1px;border-radius:3px\">",
                    weights[t], alpha);
      out += buf;
      out += html_escape(viz.tokens[t]);
      out += "</span> ";
    }
    out += "</div>\n";
  }
  out += "</body>\n</html>\n";
  return out;
}

std::vector<AttentionVisualization> export_attention(const AttentionClassifier& model,
                                                     const EmbeddingTable& table,
                                                     const std::vector<CleanRecord>& records,
                                                     const std::vector<std::size_t>& hops,
                                                     double min_confidence,
                                                     const std::string& out_dir) {
  const std::size_t r = model.config().hops;
  for (std::size_t hop : hops)
    if (hop >= r)
      throw std::invalid_argument("export_attention: hop index " + std::to_string(hop) +
                                  " out of range (r = " + std::to_string(r) + ")");

  std::vector<AttentionVisualization> kept;
  RngState unused(0);
  for (const auto& rec : records) {
    std::vector<std::uint32_t> indices;
    indices.reserve(rec.tokens.size());
    for (const auto& tok : rec.tokens) indices.push_back(table.lookup(tok).value_or(kOovIndex));

    AttentionNetCache cache;
    const double p = model.forward(table.embed(indices), false, unused, &cache);
    const double confidence = std::max(p, 1.0 - p);
    if (!(confidence > min_confidence)) continue;

    AttentionVisualization viz;
    viz.id = rec.id;
    viz.language = rec.language;
    viz.tokens = rec.tokens;
    viz.hops = hops;
    viz.probability = p;
    viz.confidence = confidence;
    viz.predicted = predict_label(p);

    const MatrixD& a = cache.attn.a;
    for (std::size_t hop : hops) {
      const double* row = a.row_ptr(hop);
      viz.hop_weights.emplace_back(row, row + a.cols);
    }

    // Redundancy diagnostic: mean cosine over all hop pairs of the full A.
    double cos_sum = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < a.rows; ++i)
      for (std::size_t j = i + 1; j < a.rows; ++j) {
        double dot = 0.0, ni = 0.0, nj = 0.0;
        for (std::size_t k = 0; k < a.cols; ++k) {
          dot += a(i, k) * a(j, k);
          ni += a(i, k) * a(i, k);
          nj += a(j, k) * a(j, k);
        }
        cos_sum += dot / std::sqrt(ni * nj);
        ++pairs;
      }
    viz.mean_pairwise_cosine = pairs == 0 ? 1.0 : cos_sum / static_cast<double>(pairs);

    if (!out_dir.empty()) {
      const std::string stem =
          (std::filesystem::path(out_dir) / ("attn_" + viz.id + "_" + to_string(viz.language)))
              .string();
      std::ofstream js(stem + ".json", std::ios::binary);
      if (!js) throw IoError("cannot write " + stem + ".json");
      js << attention_to_json(viz);
      std::ofstream html(stem + ".html", std::ios::binary);
      if (!html) throw IoError("cannot write " + stem + ".html");
      html << attention_to_html(viz);
    }
    kept.push_back(std::move(viz));
  }
  return kept;
}

}  // namespace snet
