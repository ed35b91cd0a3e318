// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "snet/training.hpp"

namespace snet {

struct ConfusionCounts {
  std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;
  std::uint64_t total() const { return tp + fp + fn + tn; }
  void add(int predicted, int actual);
};

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct MetricsReport {
  double accuracy = 0.0;
  ClassMetrics positive;  // label 1
  ClassMetrics negative;  // label 0
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
};

// Per-class precision/recall/F1 with 0/0 defined as 0; macro values are the
// unweighted means over the two classes.
MetricsReport compute_metrics(const ConfusionCounts& counts);

std::string metrics_to_json(const MetricsReport& report, const std::string& model_name);
// Table-style row: model,accuracy,precision,recall,f1
std::string metrics_to_csv(const MetricsReport& report, const std::string& model_name);

std::vector<double> score_examples(const BaselineClassifier& model, const EmbeddingTable& table,
                                   std::span<const CleanExample> examples);
std::vector<double> score_examples(const AttentionClassifier& model, const EmbeddingTable& table,
                                   std::span<const CleanExample> examples);

MetricsReport evaluate_model(const BaselineClassifier& model, const EmbeddingTable& table,
                             std::span<const CleanExample> examples);
MetricsReport evaluate_model(const AttentionClassifier& model, const EmbeddingTable& table,
                             std::span<const CleanExample> examples);

struct AttentionVisualization {
  std::string id;
  Language language = Language::hindi;
  std::vector<std::string> tokens;
  std::vector<std::size_t> hops;
  std::vector<std::vector<double>> hop_weights;  // one length-n vector per hop
  double probability = 0.0;
  double confidence = 0.0;  // max(p, 1-p)
  int predicted = 0;
  double mean_pairwise_cosine = 0.0;  // redundancy diagnostic over all r hops
};

std::string attention_to_json(const AttentionVisualization& viz);
std::string attention_to_html(const AttentionVisualization& viz);

// Renders the requested hops for every record whose prediction confidence
// exceeds min_confidence. Writes attn_<id>_<lang>.{json,html} under out_dir
// when out_dir is non-empty; returns the kept visualizations either way.
std::vector<AttentionVisualization> export_attention(const AttentionClassifier& model,
                                                     const EmbeddingTable& table,
                                                     const std::vector<CleanRecord>& records,
                                                     const std::vector<std::size_t>& hops,
                                                     double min_confidence,
                                                     const std::string& out_dir);

}  // namespace snet
